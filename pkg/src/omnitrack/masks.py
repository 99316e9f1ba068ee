"""Mask to (r)BBox and (r)BFoV conversion.

Both converters work on the set pixels as a point cloud: a rotation of the
ERP raster is applied to pixel directions instead of resampling the image,
which keeps every pixel and avoids nearest-neighbour losses.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy import ndimage

from .annotations import Bbox, Bfov
from .errors import DomainError
from .planar import min_area_rect
from .region import _make_box, bound_in_frame, calipers_gamma
from .sphere import ErpDims, TWO_PI, pixel_lat, sph_to_pix, sph_to_vec, vec_to_sph


def mask_dims(mask: np.ndarray) -> ErpDims:
    if mask.ndim != 2:
        raise DomainError(f"mask must be single-channel, got shape {mask.shape}")
    h, w = mask.shape
    return ErpDims.checked(w, h)


def segments(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected components, with components touching across the vertical
    seam merged.  Returns (labels, count); labels are 1..count."""
    labels, n = ndimage.label(mask)
    if n == 0:
        return labels, 0
    left, right = labels[:, 0], labels[:, -1]
    both = (left > 0) & (right > 0)
    if not both.any():
        return labels, n
    parent = np.arange(n + 1)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in zip(left[both], right[both]):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(i) for i in range(n + 1)])
    uniq, relabel = np.unique(roots, return_inverse=True)
    return relabel[labels], len(uniq) - 1


def largest_segment(mask: np.ndarray) -> np.ndarray:
    labels, n = segments(mask)
    counts = np.bincount(labels.ravel(), minlength=n + 1)
    counts[0] = 0
    return labels == int(np.argmax(counts))


def boundary_pixels(mask: np.ndarray) -> np.ndarray:
    """Set pixels with an unset 4-neighbour; columns wrap, rows do not."""
    m = mask.astype(bool)
    interior = m.copy()
    interior[1:, :] &= m[:-1, :]
    interior[:-1, :] &= m[1:, :]
    interior[0, :] = False
    interior[-1, :] = False
    interior &= np.roll(m, 1, axis=1) & np.roll(m, -1, axis=1)
    return m & ~interior


def _pixel_dirs(rows, cols, dims: ErpDims) -> np.ndarray:
    w, h = dims
    lon = ((cols + 0.5) / w - 0.5) * TWO_PI
    lat = (0.5 - (rows + 0.5) / h) * math.pi
    return sph_to_vec(lon, lat)


def _corner_dirs(rows, cols, dims: ErpDims) -> np.ndarray:
    w, h = dims
    r = np.concatenate([rows, rows, rows + 1, rows + 1])
    c = np.concatenate([cols, cols + 1, cols, cols + 1])
    lon = (c / w - 0.5) * TWO_PI
    lat = (0.5 - r / h) * math.pi
    return sph_to_vec(lon, lat)


def _area_centroid(rows, cols, dims: ErpDims) -> tuple[float, float]:
    """Area-weighted mean direction of pixel centres (ERP pixel area ~ cos lat)."""
    wts = np.cos(pixel_lat(dims))[rows]
    m = (_pixel_dirs(rows, cols, dims) * wts[:, None]).sum(0)
    if np.linalg.norm(m) < 1e-9:
        return 0.0, 0.0
    return vec_to_sph(m)


def mask_to_bbox(mask: np.ndarray, need_rotation: bool = False) -> Optional[Bbox]:
    """Minimum-area (rotated) box of a mask, unbiased at the seam.

    The largest segment's centroid is moved to the horizontal centre (a
    pure longitude rotation, i.e. a circular column shift), the box is
    fitted there and shifted back.
    """
    dims = mask_dims(mask)
    w_m = dims.width
    if not mask.any():
        return None
    rows, cols = np.nonzero(largest_segment(mask))
    lon1, _ = _area_centroid(rows, cols, dims)
    x1, _ = sph_to_pix(lon1, 0.0, dims)
    dx = x1 - w_m / 2

    br, bc = np.nonzero(boundary_pixels(mask))
    uc = np.mod(bc + 0.5 - dx, w_m)
    u = np.concatenate([uc - 0.5, uc + 0.5, uc - 0.5, uc + 0.5])
    v = np.concatenate([br, br, br + 1.0, br + 1.0])
    if need_rotation:
        cx, cy, w, h, g = min_area_rect(np.stack([u, v], -1))
        corners = Bbox(cx, cy, w, h, g).corners()
        extent = float(np.ptp(corners[:, 0]))
    else:
        cx, cy = 0.5 * (u.min() + u.max()), 0.5 * (v.min() + v.max())
        w, h, g = float(u.max() - u.min()), float(v.max() - v.min()), 0.0
        extent = w
    if extent < w_m - 1:
        cx = cx + dx
    else:
        cx = w / 2
    return _make_box(cx, cy, w, h, g, dims)


def mask_to_bfov(mask: np.ndarray, need_rotation: bool = False) -> Optional[Bfov]:
    """Bounding field of view of a mask.

    Recentres twice (largest-segment centroid, then the whole-mask centroid),
    takes the centre and roll of the minimum-area rectangle in the resulting
    frame and bounds the mask's pixel corners seen from there, so that the
    returned region covers the mask.
    """
    dims = mask_dims(mask)
    if not mask.any():
        return None
    rows, cols = np.nonzero(largest_segment(mask))
    lon1, lat1 = _area_centroid(rows, cols, dims)
    rows, cols = np.nonzero(mask)
    wts = np.cos(pixel_lat(dims))[rows]
    m = (_pixel_dirs(rows, cols, dims) * wts[:, None]).sum(0)
    lon2, lat2 = vec_to_sph(m) if np.linalg.norm(m) > 1e-9 * wts.sum() else (lon1, lat1)

    br, bc = np.nonzero(boundary_pixels(mask))
    edge = _corner_dirs(br, bc, dims)
    (lon3, lat3), _, _, gamma = calipers_gamma(edge, lon2, lat2)
    if not need_rotation:
        gamma = 0.0
    return bound_in_frame(edge, lon3, lat3, gamma, enclose=True)


def rotate_mask(mask: np.ndarray, rot: np.ndarray) -> np.ndarray:
    """Move mask content by ``rot``: output pixel p is set iff the input is set
    at the direction ``rot^-1 . dir(p)`` (nearest neighbour)."""
    dims = mask_dims(mask)
    w, h = dims
    lon = ((np.arange(w) + 0.5) / w - 0.5) * TWO_PI
    lat = pixel_lat(dims)
    src = sph_to_vec(lon[None, :], lat[:, None]) @ rot  # rows are rot^T d
    slon, slat = vec_to_sph(src)
    u, v = sph_to_pix(slon, slat, dims)
    col = np.floor(u).astype(np.int64) % w
    row = np.clip(np.floor(v).astype(np.int64), 0, h - 1)
    return mask[row, col]
