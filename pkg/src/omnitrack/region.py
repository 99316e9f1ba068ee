"""ERP regions of (r)BFoVs: tangent-plane and spherical-surface grids,
unwarping of local search images, and back-projection of local
predictions to global boxes and fields of view."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .annotations import Bbox, Bfov, canonical_gamma, validate_bfov
from .errors import DomainError
from .planar import min_area_rect
from .sphere import (
    TWO_PI,
    ErpDims,
    frame_rotation,
    normalize,
    sph_to_pix,
    sph_to_vec,
    vec_to_sph,
    wrap_lon,
)

TANGENT = "tangent"
SPHERE = "sphere"
_RIGHT_ANGLE = 0.5 * math.pi
MAX_SIDE = 1024
EDGE_SAMPLES = 64


def region_mode(theta: float, phi: float) -> str:
    """Tangent plane only while both extents stay below 90 degrees."""
    return TANGENT if (theta < _RIGHT_ANGLE and phi < _RIGHT_ANGLE) else SPHERE


def local_shape(theta: float, phi: float, dims: ErpDims, ppd: float | None = None,
                max_side: int = MAX_SIDE, min_side: int = 2) -> tuple[int, int]:
    """Local image (height, width) for a region of the given extents.

    Defaults to the native equatorial density of the ERP frame (W/360 px
    per degree); the longer side is capped at ``max_side`` keeping the
    aspect ratio.
    """
    if ppd is None:
        ppd = dims.width / 360.0
    w = math.degrees(theta) * ppd
    h = math.degrees(phi) * ppd
    scale = min(1.0, max_side / max(w, h))
    return max(min_side, int(round(h * scale))), max(min_side, int(round(w * scale)))


def _axis(n: int, half: float) -> np.ndarray:
    return np.linspace(-half, half, n) if n > 1 else np.zeros(1)


def tangent_grid(theta: float, phi: float, shape: tuple[int, int]) -> np.ndarray:
    """Unit directions through a uniform grid on the plane Z = 1 spanning
    +-tan(theta/2) horizontally and +-tan(phi/2) vertically; row 0 is the top."""
    if not (0 < theta < math.pi and 0 < phi < math.pi):
        raise DomainError("a tangent plane cannot span 180 degrees or more")
    hr, wr = shape
    x = _axis(wr, math.tan(theta / 2))
    y = _axis(hr, math.tan(phi / 2))
    xx, yy = np.meshgrid(x, y)
    return normalize(np.stack([xx, yy, np.ones_like(xx)], axis=-1))


def sphere_grid(theta: float, phi: float, shape: tuple[int, int]) -> np.ndarray:
    """Unit directions on a uniform (Theta, Phi) grid of the spherical patch
    ``[cos(Phi) sin(Theta), -sin(Phi), cos(Phi) cos(Theta)]``."""
    if not (0 < theta <= TWO_PI + 1e-12 and 0 < phi <= math.pi + 1e-12):
        raise DomainError("spherical patch extents out of range")
    hr, wr = shape
    big_theta = _axis(wr, theta / 2)
    big_phi = -_axis(hr, phi / 2)
    tt, pp = np.meshgrid(big_theta, big_phi)
    cp = np.cos(pp)
    return np.stack([cp * np.sin(tt), -np.sin(pp), cp * np.cos(tt)], axis=-1)


@dataclass(frozen=True)
class RegionMap:
    """Sphere direction of every pixel of a local (unwarped) image."""

    bfov: Bfov
    dims: ErpDims
    mode: str
    dirs: np.ndarray = field(repr=False)
    forced: bool = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.dirs.shape[:2]

    @property
    def rotation(self) -> np.ndarray:
        f = self.bfov
        return frame_rotation(f.clon, f.clat, f.gamma)


def build_region(f: Bfov, dims: ErpDims, shape: tuple[int, int] | None = None,
                 mode: str | None = None, ppd: float | None = None) -> RegionMap:
    """Directions of the ERP region of ``f``.  ``mode`` overrides the
    automatic tangent/sphere choice (ablations only)."""
    validate_bfov(f)
    auto = region_mode(f.theta, f.phi)
    if mode is None:
        mode = auto
    if mode not in (TANGENT, SPHERE):
        raise DomainError(f"unknown region mode {mode!r}")
    if shape is None:
        shape = local_shape(f.theta, f.phi, dims, ppd=ppd)
    grid = tangent_grid(f.theta, f.phi, shape) if mode == TANGENT else sphere_grid(f.theta, f.phi, shape)
    rot = frame_rotation(f.clon, f.clat, f.gamma)
    dirs = grid @ rot.T
    dirs.setflags(write=False)
    return RegionMap(f, dims, mode, dirs, forced=(mode != auto))


def sample_bilinear(image: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Bilinear sampling at continuous ERP coordinates, wrapping across the
    vertical seam and clamping at the poles."""
    h, w = image.shape[:2]
    x = np.asarray(u, dtype=float) - 0.5
    y = np.clip(np.asarray(v, dtype=float) - 0.5, 0.0, h - 1.0)
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    x0 = x0.astype(np.int64) % w
    x1 = (x0 + 1) % w
    y0 = y0.astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    img = image.astype(np.float64, copy=False)
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def unwarp(frame: np.ndarray, rm: RegionMap) -> np.ndarray:
    """Resample the ERP ``frame`` onto the local grid of ``rm``."""
    h, w = frame.shape[:2]
    if (w, h) != tuple(rm.dims):
        raise DomainError(f"frame is {w}x{h} but region targets {rm.dims.width}x{rm.dims.height}")
    lon, lat = vec_to_sph(rm.dirs)
    u, v = sph_to_pix(lon, lat, rm.dims)
    out = sample_bilinear(frame, u, v)
    if np.issubdtype(frame.dtype, np.integer):
        info = np.iinfo(frame.dtype)
        out = np.clip(np.rint(out), info.min, info.max)
    return out.astype(frame.dtype)


def local_to_global_dirs(points, rm: RegionMap) -> np.ndarray:
    """Directions of local continuous pixel coordinates ``(x, y)``.

    Pixel (row i, col j) of the local image is grid node (i, j) and has its
    centre at (j + 0.5, i + 0.5).  Directions are bilinearly interpolated in
    3D and renormalised; the half-pixel rim is linearly extrapolated.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    hr, wr = rm.shape
    tol = 1e-9
    x, y = pts[:, 0], pts[:, 1]
    if np.any((x < -tol) | (x > wr + tol) | (y < -tol) | (y > hr + tol)) or np.any(~np.isfinite(pts)):
        raise DomainError(f"local point outside the {wr}x{hr} image")
    s = x - 0.5
    t = y - 0.5
    j0 = np.clip(np.floor(s), 0, max(wr - 2, 0)).astype(np.int64)
    i0 = np.clip(np.floor(t), 0, max(hr - 2, 0)).astype(np.int64)
    j1 = np.minimum(j0 + 1, wr - 1)
    i1 = np.minimum(i0 + 1, hr - 1)
    fs = (s - j0)[:, None]
    ft = (t - i0)[:, None]
    d = rm.dirs
    top = d[i0, j0] * (1 - fs) + d[i0, j1] * fs
    bot = d[i1, j0] * (1 - fs) + d[i1, j1] * fs
    return normalize(top * (1 - ft) + bot * ft)


def local_points_to_global(points, rm: RegionMap) -> tuple[np.ndarray, np.ndarray]:
    return vec_to_sph(local_to_global_dirs(points, rm))


def global_to_local(dirs, rm: RegionMap) -> np.ndarray:
    """Analytic inverse of the grid: local ``(x, y)`` per direction; NaN where
    the direction has no preimage (behind a tangent plane)."""
    local = np.asarray(dirs, dtype=float).reshape(-1, 3) @ rm.rotation
    hr, wr = rm.shape
    f = rm.bfov
    x, y, z = local[:, 0], local[:, 1], local[:, 2]
    if rm.mode == TANGENT:
        tx, ty = math.tan(f.theta / 2), math.tan(f.phi / 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            gx = np.where(z > 1e-12, x / z, np.nan)
            gy = np.where(z > 1e-12, y / z, np.nan)
        s = (gx + tx) / (2 * tx) * (wr - 1)
        t = (gy + ty) / (2 * ty) * (hr - 1)
    else:
        big_theta = np.arctan2(x, z)
        big_phi = np.arctan2(-y, np.hypot(x, z))
        s = (big_theta + f.theta / 2) / f.theta * (wr - 1)
        t = (f.phi / 2 - big_phi) / f.phi * (hr - 1)
    return np.stack([s + 0.5, t + 0.5], axis=-1)


def region_contains(f: Bfov, dirs, mode: str | None = None) -> np.ndarray:
    """Membership of directions in the ERP region of ``f``."""
    dirs = np.asarray(dirs, dtype=float)
    local = dirs @ frame_rotation(f.clon, f.clat, f.gamma)
    x, y, z = local[..., 0], local[..., 1], local[..., 2]
    if mode is None:
        mode = region_mode(f.theta, f.phi)
    if mode == TANGENT:
        tx, ty = math.tan(f.theta / 2), math.tan(f.phi / 2)
        return (z > 0) & (np.abs(x) <= tx * z) & (np.abs(y) <= ty * z)
    inside = np.abs(np.arctan2(-y, np.hypot(x, z))) <= f.phi / 2
    if f.theta < TWO_PI:
        inside &= np.abs(np.arctan2(x, z)) <= f.theta / 2
    return inside


def region_radius(f: Bfov) -> float:
    """Upper bound on the angle between the centre and any region point."""
    if f.theta >= math.pi or f.phi >= math.pi:
        return math.pi
    return math.acos(math.cos(f.theta / 2) * math.cos(f.phi / 2))


def region_boundary(f: Bfov, n_per_edge: int = EDGE_SAMPLES, mode: str | None = None) -> np.ndarray:
    """Directions sampled along the closed boundary of the region, in order."""
    if mode is None:
        mode = region_mode(f.theta, f.phi)
    n = max(2, n_per_edge)
    a = np.linspace(-1.0, 1.0, n)
    # top, right, bottom, left in parameter space, each edge without its last point
    ps = np.concatenate([
        np.stack([a[:-1], -np.ones(n - 1)], -1),
        np.stack([np.ones(n - 1), a[:-1]], -1),
        np.stack([-a[:-1], np.ones(n - 1)], -1),
        np.stack([-np.ones(n - 1), -a[:-1]], -1),
    ])
    if mode == TANGENT:
        if f.theta >= math.pi or f.phi >= math.pi:
            raise DomainError("a tangent plane cannot span 180 degrees or more")
        local = normalize(np.stack([ps[:, 0] * math.tan(f.theta / 2),
                                    ps[:, 1] * math.tan(f.phi / 2),
                                    np.ones(len(ps))], -1))
    else:
        th = ps[:, 0] * f.theta / 2
        ph = -ps[:, 1] * f.phi / 2
        local = np.stack([np.cos(ph) * np.sin(th), -np.sin(ph), np.cos(ph) * np.cos(th)], -1)
    return local @ frame_rotation(f.clon, f.clat, f.gamma).T


def region_solid_angle(rm: RegionMap) -> float:
    """Area (sr) of the grid's quadrilateral mesh, summed as spherical
    triangles.  Exact for tangent grids, whose cell edges are great-circle arcs."""
    d = rm.dirs
    a, b, c, e = d[:-1, :-1], d[:-1, 1:], d[1:, 1:], d[1:, :-1]
    return float(_tri_area(a, b, c).sum() + _tri_area(a, c, e).sum())


def _tri_area(a, b, c):
    num = np.abs(np.einsum("...i,...i", a, np.cross(b, c)))
    den = 1 + np.einsum("...i,...i", a, b) + np.einsum("...i,...i", b, c) + np.einsum("...i,...i", c, a)
    return 2 * np.arctan2(num, den)


# --- back-projection -------------------------------------------------------

def points_to_min_bbox(lon, lat, dims: ErpDims, rotated: bool = False) -> Bbox:
    """Minimum-area (rotated) rectangle around sphere points on the ERP image.

    Points are first made contiguous by the circular shift that opens the
    largest empty column gap, so boxes may run across the seam.
    """
    u, v = sph_to_pix(np.atleast_1d(lon), np.atleast_1d(lat), dims)
    u = np.atleast_1d(u)
    v = np.atleast_1d(v)
    if u.size == 0:
        raise DomainError("points_to_min_bbox needs at least one point")
    start = seam_shift(u, dims.width)
    us = np.mod(u - start, dims.width)
    if rotated:
        cx, cy, w, h, g = min_area_rect(np.stack([us, v], -1))
    else:
        cx, cy = 0.5 * (us.min() + us.max()), 0.5 * (v.min() + v.max())
        w, h, g = us.max() - us.min(), v.max() - v.min(), 0.0
    return _make_box(cx + start, cy, w, h, g, dims)


def seam_shift(u: np.ndarray, width: float) -> float:
    """Offset that, subtracted from ``u`` (mod width), makes the points
    contiguous: the start of the column run after the widest empty gap."""
    su = np.sort(np.mod(u, width))
    if su.size == 1:
        return float(su[0])
    gaps = np.diff(np.concatenate([su, [su[0] + width]]))
    k = int(np.argmax(gaps))
    return float(su[(k + 1) % su.size])


def _make_box(cx, cy, w, h, g, dims: ErpDims, min_side: float = 1e-6) -> Bbox:
    g, w, h = canonical_gamma(g, max(w, min_side), max(h, min_side))
    cx = math.fmod(cx, dims.width)
    if cx < 0:
        cx += dims.width
    if cx >= dims.width:
        cx -= dims.width
    return Bbox(float(cx), float(cy), float(w), float(h), float(g))


def wrap_half_turn(g: float) -> float:
    """Angle modulo pi into (-pi/2, pi/2]."""
    g = math.fmod(g, math.pi)
    if g > _RIGHT_ANGLE:
        g -= math.pi
    elif g <= -_RIGHT_ANGLE:
        g += math.pi
    return g


def spherical_centroid(dirs, weights=None) -> tuple[float, float]:
    """Normalised (weighted) mean direction; (0, 0) when it vanishes."""
    dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
    m = dirs.mean(axis=0) if weights is None else (dirs * np.asarray(weights)[:, None]).sum(0) / np.sum(weights)
    if np.linalg.norm(m) < 1e-9:
        return 0.0, 0.0
    return vec_to_sph(m)


def frame_lonlat(dirs, clon: float, clat: float, gamma: float = 0.0):
    """(lon, lat) of directions seen from the frame centred at (clon, clat)
    with roll gamma."""
    local = np.asarray(dirs, dtype=float).reshape(-1, 3) @ frame_rotation(clon, clat, gamma)
    x, y, z = local[:, 0], local[:, 1], local[:, 2]
    return np.arctan2(x, z), np.arctan2(-y, np.hypot(x, z))


def calipers_gamma(dirs, clon: float, clat: float):
    """Minimum-area rectangle of the points in the (lon, -lat) plane of the
    frame at (clon, clat).  Returns the rectangle centre as a sphere point,
    its sides and the roll that lays its longer side horizontally."""
    lon, lat = frame_lonlat(dirs, clon, clat)
    cx, cy, w, h, g = min_area_rect(np.stack([lon, -lat], -1))
    centre = frame_rotation(clon, clat) @ sph_to_vec(cx, -cy)
    c_lon, c_lat = vec_to_sph(centre)
    gamma = g if w > h else g - _RIGHT_ANGLE
    return (c_lon, c_lat), w, h, wrap_half_turn(gamma)


def bound_in_frame(dirs, clon: float, clat: float, gamma: float = 0.0, enclose: bool = False) -> Bfov:
    """Bounding field of view of directions in the frame (clon, clat, gamma).

    The centre is the mid-range point of the longitudes/latitudes seen from
    that frame.  By default the extents are those ranges.  With ``enclose``
    they are symmetric about the centre and measured in the region semantics
    the result will have (plane slopes while both stay below 90 degrees,
    patch angles otherwise), so the region is guaranteed to cover every
    direction; a lon/lat range rectangle pokes out of the tangent region at
    its corners.
    """
    lon, lat = frame_lonlat(dirs, clon, clat, gamma)
    if not enclose:
        lo, hi = float(lon.min()), float(lon.max())
        la, lb = float(lat.min()), float(lat.max())
        mid = frame_rotation(clon, clat, gamma) @ sph_to_vec(0.5 * (lo + hi), 0.5 * (la + lb))
        c_lon, c_lat = vec_to_sph(mid)
        theta = min(max(hi - lo, 1e-9), TWO_PI)
        phi = min(max(lb - la, 1e-9), math.pi)
        return Bfov(float(wrap_lon(c_lon)), c_lat, theta, phi, gamma)
    mid = frame_rotation(clon, clat, gamma) @ sph_to_vec(0.5 * (lon.min() + lon.max()), 0.5 * (lat.min() + lat.max()))
    c_lon, c_lat = vec_to_sph(mid)
    c_lon = float(wrap_lon(c_lon))
    local = np.asarray(dirs, dtype=float).reshape(-1, 3) @ frame_rotation(c_lon, c_lat, gamma)
    x, y, z = local[:, 0], local[:, 1], local[:, 2]
    half_theta = float(np.abs(np.arctan2(x, z)).max())
    half_phi = float(np.abs(np.arctan2(-y, np.hypot(x, z))).max())
    # vertical half-extent measured on the tangent plane
    plane_phi = float(np.arctan(np.abs(y) / z).max()) if np.all(z > 1e-12) else math.pi
    theta = min(max(2 * half_theta, 1e-9), TWO_PI)
    if region_mode(theta, 2 * plane_phi) == TANGENT:
        phi = max(2 * plane_phi, 1e-9)
    elif region_mode(theta, 2 * half_phi) == TANGENT:
        # the plane bound is what reaches 90 degrees; keep it so the
        # region is a spherical patch that still covers every point
        phi = min(2 * plane_phi, math.pi)
    else:
        phi = min(max(2 * half_phi, 1e-9), math.pi)
    return Bfov(c_lon, c_lat, theta, phi, gamma)


def dirs_to_bfov(dirs, rotated: bool = False, gamma_hint: float | None = None) -> Bfov:
    dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
    if len(dirs) == 0:
        raise DomainError("points_to_bfov needs at least one point")
    clon, clat = spherical_centroid(dirs)
    gamma = 0.0
    if rotated:
        gamma = wrap_half_turn(gamma_hint) if gamma_hint is not None else calipers_gamma(dirs, clon, clat)[3]
    return bound_in_frame(dirs, clon, clat, gamma)


def points_to_bfov(lon, lat, rotated: bool = False, gamma_hint: float | None = None) -> Bfov:
    """Maximum bounding field of view of sphere points, measured in the frame
    of their centroid (rolled by gamma when ``rotated``)."""
    return dirs_to_bfov(sph_to_vec(np.atleast_1d(lon), np.atleast_1d(lat)), rotated, gamma_hint)
