"""Draw annotation boundaries on ERP frames."""
from __future__ import annotations

from typing import Optional, Union

import cv2
import numpy as np

from .annotations import Bbox, Bfov
from .region import region_boundary
from .sphere import ErpDims, sph_to_pix, vec_to_sph

GT_COLOR = (0, 200, 0)
RESULT_COLOR = (0, 0, 255)


def split_at_seam(u: np.ndarray, v: np.ndarray, width: int) -> list[np.ndarray]:
    """Break a closed polyline wherever it jumps across the seam."""
    pts = np.stack([u, v], axis=-1)
    pts = np.vstack([pts, pts[:1]])
    jumps = np.nonzero(np.abs(np.diff(pts[:, 0])) > width / 2)[0]
    pieces = np.split(pts, jumps + 1)
    if len(pieces) > 1:
        # the closing run continues the first one
        pieces[0] = np.vstack([pieces[-1], pieces[0]])
        pieces.pop()
    return [p for p in pieces if len(p) > 1]


def bfov_polylines(f: Bfov, dims: ErpDims, n_per_edge: int = 64) -> list[np.ndarray]:
    lon, lat = vec_to_sph(region_boundary(f, n_per_edge))
    u, v = sph_to_pix(lon, lat, dims)
    return split_at_seam(u, v, dims.width)


def bbox_polylines(b: Bbox, dims: ErpDims) -> list[np.ndarray]:
    c = b.corners()
    c = np.vstack([c, c[:1]])
    return [c + [du, 0.0] for du in (-dims.width, 0.0, dims.width)]


def draw(img: np.ndarray, item: Optional[Union[Bbox, Bfov]], color, thickness: int = 2) -> int:
    """Draw one annotation in place; returns the number of polylines."""
    if item is None:
        return 0
    dims = ErpDims(img.shape[1], img.shape[0])
    lines = bfov_polylines(item, dims) if isinstance(item, Bfov) else bbox_polylines(item, dims)
    pts = [np.round(p).astype(np.int32).reshape(-1, 1, 2) for p in lines]
    cv2.polylines(img, pts, isClosed=False, color=color, thickness=thickness, lineType=cv2.LINE_AA)
    return len(pts)


def render_frame(frame: np.ndarray, gt=None, result=None) -> np.ndarray:
    img = frame.copy() if frame.ndim == 3 else cv2.cvtColor(frame, cv2.COLOR_GRAY2BGR)
    draw(img, gt, GT_COLOR)
    draw(img, result, RESULT_COLOR)
    return img
