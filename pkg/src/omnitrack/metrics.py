"""Omnidirectional tracking metrics: dual success/precision on ERP boxes,
angle precision, spherical IoU and one-pass-evaluation curves."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .annotations import Bbox, Bfov, FrameAnnotation
from .errors import ValidationError
from .planar import clip_convex, polygon_area
from .region import region_contains, region_radius
from .sphere import ErpDims, TWO_PI, frame_rotation, pix_to_sph, sph_to_vec, vec_angle, vec_to_sph

SPHERE_GRID = ErpDims(1024, 512)
SUCCESS_THRESHOLDS = np.linspace(0.0, 1.0, 101)
PRECISION_THRESHOLDS = np.arange(0, 51, dtype=float)
NORM_PRECISION_THRESHOLDS = np.linspace(0.0, 0.5, 51)
ANGLE_THRESHOLDS = np.linspace(0.0, 10.0, 101)
PRECISION_PX = 20.0
ANGLE_DEG = 3.0
_WINDOW_LIMIT = math.radians(60.0)


def iou_bbox(a: Bbox, b: Bbox) -> float:
    """Plain IoU of two (possibly rotated) boxes; no seam handling."""
    if a.gamma == 0.0 and b.gamma == 0.0:
        iw = min(a.cx + a.w / 2, b.cx + b.w / 2) - max(a.cx - a.w / 2, b.cx - b.w / 2)
        ih = min(a.cy + a.h / 2, b.cy + b.h / 2) - max(a.cy - a.h / 2, b.cy - b.h / 2)
        inter = max(iw, 0.0) * max(ih, 0.0)
    else:
        if math.hypot(a.cx - b.cx, a.cy - b.cy) > 0.5 * (math.hypot(a.w, a.h) + math.hypot(b.w, b.h)):
            return 0.0
        inter = polygon_area(clip_convex(a.corners(), b.corners()))
    union = a.area + b.area - inter
    return float(inter / union) if union > 0 else 0.0


def _shifts(dims: ErpDims):
    # unshifted first: ties resolve towards it
    return (0.0, -float(dims.width), float(dims.width))


def success_dual(gt: Bbox, tr: Bbox, dims: ErpDims) -> float:
    best = None
    for du in _shifts(dims):
        s = iou_bbox(gt.shifted(du), tr)
        if best is None or s > best:
            best = s
    return best


def precision_dual(gt: Bbox, tr: Bbox, dims: ErpDims) -> float:
    best = None
    for du in _shifts(dims):
        p = math.hypot(gt.cx + du - tr.cx, gt.cy - tr.cy)
        if best is None or p < best:
            best = p
    return best


def normalized_precision_dual(gt: Bbox, tr: Bbox, dims: ErpDims) -> float:
    """Centre error scaled componentwise by the ground-truth size."""
    if gt.w <= 0 or gt.h <= 0:
        raise ValidationError("normalised precision needs a ground truth of positive size")
    best = None
    for du in _shifts(dims):
        p = math.hypot((gt.cx + du - tr.cx) / gt.w, (gt.cy - tr.cy) / gt.h)
        if best is None or p < best:
            best = p
    return best


def box_center_lonlat(b: Bbox, dims: ErpDims) -> tuple[float, float]:
    return pix_to_sph(b.cx % dims.width, min(max(b.cy, 0.0), dims.height), dims)


def angle_precision(gt_center, tr_center) -> float:
    """Great-circle angle in degrees between two (lon, lat) centres."""
    va = sph_to_vec(*gt_center)
    vb = sph_to_vec(*tr_center)
    return math.degrees(vec_angle(va, vb))


def _sample_frame(a: Bfov, b: Bfov) -> np.ndarray:
    ca, cb = sph_to_vec(a.clon, a.clat), sph_to_vec(b.clon, b.clat)
    m = ca + cb
    if np.linalg.norm(m) < 1e-9:
        m = max(tuple(ca), tuple(cb))
    lon, lat = vec_to_sph(np.asarray(m))
    return frame_rotation(lon, lat)


@lru_cache(maxsize=4)
def _jitter(rows: int, cols: int) -> tuple[np.ndarray, np.ndarray]:
    # fixed sub-cell offsets; a regular lattice lines up with region edges
    rng = np.random.default_rng(0x5EED)
    ju, jv = rng.uniform(-0.5, 0.5, size=(2, rows, cols))
    ju.flags.writeable = jv.flags.writeable = False
    return ju, jv


def sphere_iou(a: Bfov, b: Bfov, grid: ErpDims = SPHERE_GRID) -> float:
    """Spherical IoU of two (r)BFoV regions by cos(lat)-weighted sampling.

    Samples (jittered cell centres) live on a latitude/longitude grid in the frame centred between
    the two centres, so the result is exactly symmetric and invariant to a
    common rotation.  When both regions fit in a cap narrower than 60
    degrees the grid covers only that cap's bounding window (``grid.height``
    samples per side), otherwise the whole sphere at ``grid`` resolution.
    """
    rot = _sample_frame(a, b)
    mid = rot[:, 2]
    reach = max(
        vec_angle(mid, sph_to_vec(a.clon, a.clat)) + region_radius(a),
        vec_angle(mid, sph_to_vec(b.clon, b.clat)) + region_radius(b),
    )
    if reach < _WINDOW_LIMIT:
        n = grid.height
        ju, jv = _jitter(n, n)
        step = 2 * reach / n
        lon = (np.arange(n)[None, :] + 0.5 + ju) * step - reach
        lat = (np.arange(n)[:, None] + 0.5 + jv) * step - reach
    else:
        w, h = grid
        ju, jv = _jitter(h, w)
        lon = ((np.arange(w)[None, :] + 0.5 + ju) / w - 0.5) * TWO_PI
        lat = (0.5 - (np.arange(h)[:, None] + 0.5 + jv) / h) * math.pi
    dirs = sph_to_vec(lon, lat) @ rot.T
    wts = np.cos(lat)
    ia = region_contains(a, dirs)
    ib = region_contains(b, dirs)
    union = float(wts[ia | ib].sum())
    if union == 0.0:
        return 1.0 if a == b else 0.0
    return float(wts[ia & ib].sum()) / union


# --- one-pass evaluation ----------------------------------------------------

@dataclass
class FramePair:
    gt: Optional[FrameAnnotation]
    tr: Optional[FrameAnnotation]
    dims: ErpDims


def success_curve(overlaps, thresholds=SUCCESS_THRESHOLDS) -> np.ndarray:
    """Fraction of frames with overlap >= t; frames without any overlap
    never count as a success."""
    o = np.asarray(overlaps, dtype=float)[:, None]
    hit = (o >= thresholds[None, :] - 1e-9) & (o > 0)
    return hit.mean(axis=0) if len(o) else np.zeros(len(thresholds))


def error_curve(errors, thresholds) -> np.ndarray:
    """Fraction of frames with error <= t."""
    e = np.asarray(errors, dtype=float)[:, None]
    return (e <= thresholds[None, :]).mean(axis=0) if len(e) else np.zeros(len(thresholds))


@dataclass
class MetricReport:
    representation: str
    frames: list[int]
    per_frame: dict[str, list[float]]
    curves: dict[str, list[float]]
    scalars: dict[str, float]
    thresholds: dict[str, list[float]] = field(default_factory=dict)

    def headline(self) -> dict[str, float]:
        if self.representation in ("bbox", "rbbox"):
            keys = ("S_dual(AUC)", "P_dual", "P_dual_norm(AUC)", "P_angle")
        else:
            keys = ("S_sphere(AUC)", "P_angle")
        return {k: self.scalars[k] for k in keys}

    def to_dict(self) -> dict:
        return {
            "representation": self.representation,
            "frames": list(self.frames),
            "per_frame": self.per_frame,
            "curves": self.curves,
            "thresholds": self.thresholds,
            "scalars": self.scalars,
        }


def _box_scores(gt: Bbox, tr: Optional[Bbox], dims: ErpDims) -> dict[str, float]:
    if tr is None:
        return {"S": 0.0, "S_dual": 0.0, "P_dual": math.inf, "P_dual_norm": math.inf, "P_angle": math.inf}
    return {
        "S": iou_bbox(gt, tr),
        "S_dual": success_dual(gt, tr, dims),
        "P_dual": precision_dual(gt, tr, dims),
        "P_dual_norm": normalized_precision_dual(gt, tr, dims),
        "P_angle": angle_precision(box_center_lonlat(gt, dims), box_center_lonlat(tr, dims)),
    }


def _fov_scores(gt: Bfov, tr: Optional[Bfov], grid: ErpDims) -> dict[str, float]:
    if tr is None:
        return {"S_sphere": 0.0, "P_angle": math.inf}
    return {
        "S_sphere": sphere_iou(gt, tr, grid),
        "P_angle": angle_precision((gt.clon, gt.clat), (tr.clon, tr.clat)),
    }


def ope_evaluate(pairs: Sequence[FramePair], representation: str = "bbox",
                 sphere_grid: ErpDims = SPHERE_GRID, jobs: int = 1) -> MetricReport:
    """Score a tracked sequence; the first frame initialises the tracker and
    is excluded, as are frames whose ground truth is absent.  ``jobs`` scores
    frames on a thread pool; the result does not depend on it."""
    if len(pairs) == 0:
        raise ValidationError("cannot evaluate an empty sequence")
    if len(pairs) < 2:
        raise ValidationError("one-pass evaluation needs at least two frames")
    box = representation in ("bbox", "rbbox")
    if not box and representation not in ("bfov", "rbfov"):
        raise ValidationError(f"unknown representation {representation!r}")
    frames: list[int] = []
    work = []
    for k, pair in enumerate(pairs[1:], start=1):
        if pair.gt is None or pair.gt.get(representation) is None:
            continue
        gt = pair.gt.get(representation)
        tr = pair.tr.get(representation) if pair.tr is not None else None
        work.append((gt, tr, pair.dims))
        frames.append(k)

    def score(item):
        gt, tr, dims = item
        return _box_scores(gt, tr, dims) if box else _fov_scores(gt, tr, sphere_grid)

    if jobs > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(score, work))
    else:
        rows = [score(w) for w in work]
    names = ("S", "S_dual", "P_dual", "P_dual_norm", "P_angle") if box else ("S_sphere", "P_angle")
    per_frame = {n: [r[n] for r in rows] for n in names}

    curves: dict[str, list[float]] = {}
    scalars: dict[str, float] = {}
    thresholds: dict[str, list[float]] = {"angle_deg": ANGLE_THRESHOLDS.tolist()}
    angle_curve = error_curve(per_frame["P_angle"], ANGLE_THRESHOLDS)
    curves["angle"] = angle_curve.tolist()
    scalars["P_angle"] = float(np.mean(np.asarray(per_frame["P_angle"]) <= ANGLE_DEG)) if rows else 0.0
    thresholds["success"] = SUCCESS_THRESHOLDS.tolist()
    if box:
        for key, name in (("S", "S"), ("S_dual", "S_dual")):
            c = success_curve(per_frame[key])
            curves[f"success_{key}"] = c.tolist()
            scalars[f"{name}(AUC)"] = float(c.mean())
        pc = error_curve(per_frame["P_dual"], PRECISION_THRESHOLDS)
        nc = error_curve(per_frame["P_dual_norm"], NORM_PRECISION_THRESHOLDS)
        curves["precision"] = pc.tolist()
        curves["norm_precision"] = nc.tolist()
        thresholds["precision_px"] = PRECISION_THRESHOLDS.tolist()
        thresholds["norm_precision"] = NORM_PRECISION_THRESHOLDS.tolist()
        scalars["P_dual"] = float(np.mean(np.asarray(per_frame["P_dual"]) <= PRECISION_PX)) if rows else 0.0
        scalars["P_dual_norm(AUC)"] = float(nc.mean())
    else:
        c = success_curve(per_frame["S_sphere"])
        curves["success_S_sphere"] = c.tolist()
        scalars["S_sphere(AUC)"] = float(c.mean())
    return MetricReport(representation, frames, per_frame, curves, scalars, thresholds)


def merge_reports(reports: Sequence[MetricReport]) -> dict[str, float]:
    """Sequence-averaged scalars (each sequence weighs the same)."""
    if not reports:
        raise ValidationError("no reports to merge")
    keys = sorted(reports[0].scalars)
    return {k: float(np.mean([r.scalars[k] for r in reports])) for k in keys}
