"""360 tracking loop around an arbitrary local tracker.

Each frame: build the search region around the previous BFoV estimate,
unwarp it, let the local tracker predict a box in the unwarped image, and
lift the box boundary back to the sphere to obtain BBox, rBBox, BFoV and
rBFoV estimates.
"""
from __future__ import annotations

import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .adapter import LocalTracker
from .annotations import Bbox, Bfov, FrameAnnotation
from .dataset import write_boxes, write_fovs
from .errors import AdapterError, ValidationError
from .region import (
    EDGE_SAMPLES,
    TANGENT,
    RegionMap,
    build_region,
    dirs_to_bfov,
    local_shape,
    global_to_local,
    local_to_global_dirs,
    points_to_min_bbox,
    region_boundary,
    unwarp,
)
from .sphere import ErpDims, TWO_PI, pix_to_sph, sph_to_vec, vec_to_sph

log = logging.getLogger(__name__)

EXTENDED = "extended"
FORCE_TANGENT = "force-tangent"


@dataclass(frozen=True)
class HarnessConfig:
    context_scale: float = 2.0
    min_fov_deg: float = 30.0
    max_theta_deg: float = 360.0
    max_phi_deg: float = 180.0
    # the tangent plane degenerates at 180 degrees
    tangent_max_fov_deg: float = 170.0
    mode: str = EXTENDED
    ppd: Optional[float] = None
    max_side: int = 1024
    edge_samples: int = EDGE_SAMPLES

    def __post_init__(self):
        if self.context_scale < 1:
            raise ValidationError("context scale must be >= 1")
        if not (0 < self.min_fov_deg <= min(self.max_theta_deg, self.max_phi_deg)):
            raise ValidationError("need 0 < min FoV <= max FoV")
        if self.max_theta_deg > 360 or self.max_phi_deg > 180:
            raise ValidationError("max search FoV is at most 360 x 180 degrees")
        if not (0 < self.tangent_max_fov_deg < 180):
            raise ValidationError("tangent search FoV must stay below 180 degrees")
        if self.mode not in (EXTENDED, FORCE_TANGENT):
            raise ValidationError(f"unknown harness mode {self.mode!r}")


@dataclass
class TrackStep:
    index: int
    search: Bfov
    region_mode: str
    local_box: Optional[Bbox]
    bbox: Bbox
    rbbox: Bbox
    bfov: Bfov
    rbfov: Bfov
    score: float = 0.0
    failed: bool = False
    wall_ms: float = field(default=0.0, compare=False)

    def annotation(self) -> FrameAnnotation:
        return FrameAnnotation(self.index, bbox=self.bbox, rbbox=self.rbbox, bfov=self.bfov, rbfov=self.rbfov)


def search_region(est: Bfov, cfg: HarnessConfig) -> tuple[Bfov, str]:
    """Previous estimate enlarged by the context scale and clamped; returns
    the search BFoV and the region mode to use for it."""
    lo = math.radians(cfg.min_fov_deg)
    if cfg.mode == FORCE_TANGENT:
        hi_t = hi_p = math.radians(cfg.tangent_max_fov_deg)
    else:
        hi_t, hi_p = math.radians(cfg.max_theta_deg), math.radians(cfg.max_phi_deg)
    theta = min(max(cfg.context_scale * est.theta, lo), hi_t)
    phi = min(max(cfg.context_scale * est.phi, lo), hi_p)
    search = Bfov(est.clon, est.clat, theta, phi, 0.0)
    return search, (TANGENT if cfg.mode == FORCE_TANGENT else None)


def make_region(est: Bfov, dims: ErpDims, cfg: HarnessConfig) -> RegionMap:
    search, mode = search_region(est, cfg)
    shape = local_shape(search.theta, search.phi, dims, ppd=cfg.ppd, max_side=cfg.max_side)
    return build_region(search, dims, shape=shape, mode=mode)


def box_boundary(b: Bbox, n_per_edge: int = EDGE_SAMPLES) -> np.ndarray:
    """Points along the closed boundary of a (rotated) box, shape (4n, 2)."""
    c = b.corners()
    t = np.linspace(0.0, 1.0, n_per_edge, endpoint=False)[:, None]
    return np.concatenate([c[i] + t * (c[(i + 1) % 4] - c[i]) for i in range(4)])


def local_box_of_region(target: Bfov, rm: RegionMap, n_per_edge: int = EDGE_SAMPLES) -> Optional[Bbox]:
    """Axis-aligned local box around the visible part of ``target``'s region."""
    edge = region_boundary(target, n_per_edge)
    pts = global_to_local(np.vstack([edge, sph_to_vec(target.clon, target.clat)[None]]), rm)
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    hr, wr = rm.shape
    if len(pts) == 0:
        return None
    x0, x1 = np.clip([pts[:, 0].min(), pts[:, 0].max()], 0, wr)
    y0, y1 = np.clip([pts[:, 1].min(), pts[:, 1].max()], 0, hr)
    if x1 <= x0 or y1 <= y0:
        return None
    return Bbox(0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0, 0.0)


def lift_local_box(box: Bbox, rm: RegionMap, n_per_edge: int = EDGE_SAMPLES):
    """Global (bbox, rbbox, bfov, rbfov) of a local box prediction."""
    hr, wr = rm.shape
    pts = box_boundary(box, n_per_edge)
    pts[:, 0] = np.clip(pts[:, 0], 0, wr)
    pts[:, 1] = np.clip(pts[:, 1], 0, hr)
    dirs = local_to_global_dirs(pts, rm)
    lon, lat = vec_to_sph(dirs)
    bbox = points_to_min_bbox(lon, lat, rm.dims, rotated=False)
    rbbox = points_to_min_bbox(lon, lat, rm.dims, rotated=True)
    bfov = dirs_to_bfov(dirs, rotated=False)
    rbfov = dirs_to_bfov(dirs, rotated=True, gamma_hint=rm.bfov.gamma + box.gamma)
    return bbox, rbbox, bfov, rbfov


def bbox_to_init_bfov(b: Bbox, dims: ErpDims, n_per_edge: int = 256) -> Bfov:
    """BFoV of an ERP box: its densely sampled boundary lifted to the sphere."""
    if not (b.w > 0 and b.h > 0):
        raise ValidationError("degenerate box")
    pts = box_boundary(b, n_per_edge)
    u = np.mod(pts[:, 0], dims.width)
    v = np.clip(pts[:, 1], 0, dims.height)
    lon, lat = pix_to_sph(u, v, dims)
    f = dirs_to_bfov(sph_to_vec(lon, lat))
    if b.gamma == 0.0 and b.w >= dims.width - 1:
        # every longitude is covered
        top, bot = pix_to_sph(0.0, max(b.cy - b.h / 2, 0.0), dims)[1], pix_to_sph(0.0, min(b.cy + b.h / 2, dims.height), dims)[1]
        f = Bfov(0.0, 0.5 * (top + bot), TWO_PI, max(top - bot, 1e-9), 0.0)
    return f


def write_sidecar(path, index: int, rm: RegionMap) -> None:
    info = {
        "frame": index,
        "search_bfov_deg": list(rm.bfov.degrees()),
        "mode": rm.mode,
        "width": rm.shape[1],
        "height": rm.shape[0],
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(info, fh)
    os.replace(tmp, path)


def run_ope(frames: Sequence[np.ndarray], init: FrameAnnotation, cfg: HarnessConfig,
            adapter: LocalTracker, dims: Optional[ErpDims] = None,
            sidecar: Optional[str] = None) -> list[TrackStep]:
    """Track through ``frames`` starting from ``init`` (frame 0).

    A failing adapter call marks the step failed and carries the previous
    estimate over; once the adapter process is gone every later step fails.
    """
    if len(frames) == 0:
        raise ValidationError("no frames to track")
    first = frames[0]
    if dims is None:
        dims = ErpDims.checked(first.shape[1], first.shape[0])
    if init.bfov is not None:
        est = init.bfov
    elif init.bbox is not None:
        est = bbox_to_init_bfov(init.bbox, dims)
    else:
        raise ValidationError("initial annotation needs a BFoV or a BBox")

    t0 = time.perf_counter()
    rm = make_region(est, dims, cfg)
    local = unwarp(first, rm)
    box0 = local_box_of_region(est, rm)
    if box0 is None:
        raise ValidationError("initial target is not visible in its own search region")
    if sidecar:
        write_sidecar(sidecar, 0, rm)
    adapter.init(local, box0)
    lon, lat = vec_to_sph(region_boundary(est, cfg.edge_samples))
    steps = [TrackStep(
        0, rm.bfov, rm.mode, box0,
        init.bbox if init.bbox is not None else points_to_min_bbox(lon, lat, dims),
        init.rbbox if init.rbbox is not None else points_to_min_bbox(lon, lat, dims, rotated=True),
        est,
        init.rbfov if init.rbfov is not None else est,
        1.0, False, (time.perf_counter() - t0) * 1e3,
    )]
    dead = False
    for t in range(1, len(frames)):
        t0 = time.perf_counter()
        prev = steps[-1]
        rm = make_region(prev.bfov, dims, cfg)
        box = None
        if not dead:
            local = unwarp(frames[t], rm)
            if sidecar:
                write_sidecar(sidecar, t, rm)
            try:
                box, score = adapter.track(local)
                if not (box.w > 0 and box.h > 0):
                    raise AdapterError(f"non-positive box {box}")
            except AdapterError as exc:
                log.warning("frame %d: adapter failed: %s", t, exc)
                box = None
                alive = getattr(adapter, "alive", None)
                dead = alive is not None and not alive()
        ms = (time.perf_counter() - t0) * 1e3
        if box is None:
            steps.append(TrackStep(t, rm.bfov, rm.mode, None, prev.bbox, prev.rbbox, prev.bfov, prev.rbfov,
                                   0.0, True, ms))
            continue
        bbox, rbbox, bfov, rbfov = lift_local_box(box, rm, cfg.edge_samples)
        steps.append(TrackStep(t, rm.bfov, rm.mode, box, bbox, rbbox, bfov, rbfov, float(score), False,
                               (time.perf_counter() - t0) * 1e3))
    return steps


def write_results(out_dir, steps: Sequence[TrackStep]) -> None:
    """Write the four result files plus a per-step JSON-lines trace."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_boxes(out / "bbox.txt", [s.bbox for s in steps])
    write_boxes(out / "rbbox.txt", [s.rbbox for s in steps])
    write_fovs(out / "bfov.txt", [s.bfov for s in steps])
    write_fovs(out / "rbfov.txt", [s.rbfov for s in steps])
    with open(out / "steps.jsonl", "w", encoding="utf-8") as fh:
        for s in steps:
            fh.write(json.dumps({
                "frame": s.index,
                "search_bfov_deg": [round(x, 6) for x in s.search.degrees()],
                "region_mode": s.region_mode,
                "local_box": None if s.local_box is None else [round(x, 6) for x in (*s.local_box.as_tuple()[:4], math.degrees(s.local_box.gamma))],
                "score": s.score,
                "failed": s.failed,
                "wall_ms": round(s.wall_ms, 3),
            }) + "\n")
