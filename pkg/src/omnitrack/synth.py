"""Deterministic synthetic 360 sequences with exact targets.

A target (geodesic disk or angular rectangle) moves over a textured
sphere.  Frames and masks are rendered by a per-pixel angular test and the
four ground-truth files come from the mask converters, exactly as for real
data.  ``analytic.txt`` keeps the generating centre and extents.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .annotations import Bfov, FrameAnnotation
from .attributes import compute_attributes
from .dataset import write_boxes, write_fovs, write_lines, write_meta, write_png
from .errors import ValidationError
from .masks import mask_to_bbox, mask_to_bfov
from .sphere import ErpDims, frame_rotation, pixel_grid_dirs, rot_y, rot_z, sph_to_vec, vec_to_sph

TRAJECTORIES = ("great-circle", "latitude-sweep", "seam-loop", "pole-pass")
TARGETS = ("disk", "rect")


@dataclass(frozen=True)
class Scenario:
    name: str = "equator"
    trajectory: str = "great-circle"
    frames: int = 100
    width: int = 1024
    seed: int = 0
    target: str = "disk"
    radius_deg: float = 10.0
    radius_end_deg: Optional[float] = None
    rect_w_deg: float = 30.0
    rect_h_deg: float = 16.0
    roll_deg: float = 0.0
    speed_deg: float = 1.0
    lon0_deg: float = 0.0
    lat0_deg: float = 0.0
    lat1_deg: float = 85.0
    inclination_deg: float = 0.0
    amplitude_deg: float = 30.0
    period: float = 100.0
    drift_deg: float = 0.3

    def __post_init__(self):
        if self.trajectory not in TRAJECTORIES:
            raise ValidationError(f"unknown trajectory {self.trajectory!r}")
        if self.target not in TARGETS:
            raise ValidationError(f"unknown target {self.target!r}")
        if self.frames < 1:
            raise ValidationError("need at least one frame")
        ErpDims.checked(self.width, self.width // 2)
        for r in (self.radius_deg, self.radius_end_deg or self.radius_deg):
            if not (0 < r < 90):
                raise ValidationError("target radius must lie in (0, 90) degrees")

    @property
    def dims(self) -> ErpDims:
        return ErpDims(self.width, self.width // 2)

    def _progress(self, t: int) -> float:
        return t / max(self.frames - 1, 1)

    def center(self, t: int) -> tuple[float, float]:
        """Target centre (lon, lat) in radians at frame ``t``."""
        r = math.radians
        if self.trajectory == "great-circle":
            s = r(self.speed_deg) * t
            p = np.array([math.sin(s), 0.0, math.cos(s)])
            v = rot_y(r(self.lon0_deg)) @ rot_z(r(self.inclination_deg)) @ p
            return vec_to_sph(v)
        if self.trajectory == "seam-loop":
            lon = math.pi + r(self.amplitude_deg) * math.sin(2 * math.pi * t / self.period)
            return vec_to_sph(sph_to_vec(lon, r(self.lat0_deg)))
        q = self._progress(t)
        if self.trajectory == "pole-pass":
            q = 1.0 - abs(2.0 * q - 1.0)
        lat = r(self.lat0_deg) + (r(self.lat1_deg) - r(self.lat0_deg)) * q
        lon = r(self.lon0_deg) + r(self.drift_deg) * t
        return vec_to_sph(sph_to_vec(lon, lat))

    def radius(self, t: int) -> float:
        end = self.radius_deg if self.radius_end_deg is None else self.radius_end_deg
        return math.radians(self.radius_deg + (end - self.radius_deg) * self._progress(t))

    def analytic(self, t: int) -> Bfov:
        """Generating region as a BFoV-like record: disk diameter or the
        rectangle's extents."""
        clon, clat = self.center(t)
        if self.target == "disk":
            d = 2 * self.radius(t)
            return Bfov(clon, clat, d, d, 0.0)
        scale = self.radius(t) / math.radians(self.radius_deg)
        return Bfov(clon, clat, math.radians(self.rect_w_deg) * scale,
                    math.radians(self.rect_h_deg) * scale, math.radians(self.roll_deg))


PRESETS: dict[str, Scenario] = {
    "equator": Scenario("equator", "great-circle", speed_deg=1.0),
    "tilted": Scenario("tilted", "great-circle", speed_deg=0.35, inclination_deg=25.0, lon0_deg=-60.0),
    "seam": Scenario("seam", "seam-loop", lat0_deg=10.0, amplitude_deg=30.0, period=200.0),
    "sweep": Scenario("sweep", "latitude-sweep", lat0_deg=0.0, lat1_deg=85.0, drift_deg=0.0),
    "pole": Scenario("pole", "pole-pass", lat0_deg=0.0, lat1_deg=85.0, drift_deg=0.05),
    "grow": Scenario("grow", "great-circle", speed_deg=0.25, radius_deg=25.0, radius_end_deg=75.0, lon0_deg=-50.0),
    "sprite": Scenario("sprite", "great-circle", target="rect", speed_deg=0.3, inclination_deg=20.0, roll_deg=20.0),
}


def parse_scenario(spec: str) -> Scenario:
    """``preset[:key=value,...]``, e.g. ``seam:frames=200,width=512``."""
    name, _, rest = spec.partition(":")
    if name not in PRESETS:
        raise ValidationError(f"unknown scenario {name!r}; presets: {', '.join(sorted(PRESETS))}")
    base = PRESETS[name]
    types = {f.name: f.type for f in fields(Scenario)}
    kwargs = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, val = item.partition("=")
        key = key.strip()
        if not eq or key not in types:
            raise ValidationError(f"bad scenario override {item!r}")
        cur = getattr(base, key)
        try:
            if key in ("trajectory", "target", "name"):
                kwargs[key] = val.strip()
            elif isinstance(cur, int) and not isinstance(cur, bool):
                kwargs[key] = int(val)
            else:
                kwargs[key] = None if val.strip().lower() == "none" else float(val)
        except ValueError:
            raise ValidationError(f"bad value in scenario override {item!r}") from None
    return replace(base, **kwargs)


def _background(dims: ErpDims, dirs: np.ndarray, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    cell = math.radians(rng.uniform(9.0, 15.0))
    offset = rng.uniform(0, cell, size=2)
    lon, lat = vec_to_sph(dirs)
    parity = (np.floor((lon + offset[0]) / cell) + np.floor((lat + math.pi / 2 + offset[1]) / cell)) % 2
    tone = np.where(parity > 0, 150, 80).astype(np.uint8)
    tint = rng.integers(0, 40, size=3).astype(np.uint8)
    img = np.repeat(tone[..., None], 3, axis=-1)
    return np.minimum(img.astype(np.int32) + tint, 255).astype(np.uint8)


def target_local(s: Scenario, t: int, dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mask of target pixels and the local longitude used for texturing."""
    f = s.analytic(t)
    local = dirs @ frame_rotation(f.clon, f.clat, f.gamma)
    x, y, z = local[..., 0], local[..., 1], local[..., 2]
    big_theta = np.arctan2(x, z)
    if s.target == "disk":
        mask = z >= math.cos(s.radius(t))
    else:
        big_phi = np.arctan2(-y, np.hypot(x, z))
        mask = (np.abs(big_theta) <= f.theta / 2) & (np.abs(big_phi) <= f.phi / 2)
    return mask, big_theta


def render_frame(s: Scenario, t: int, dirs: np.ndarray, background: np.ndarray):
    mask, big_theta = target_local(s, t, dirs)
    img = background.copy()
    stripes = (np.floor(np.degrees(big_theta[mask]) / 3.0) % 2).astype(np.uint8)
    img[mask] = np.stack([220 - 30 * stripes, 140 + 40 * stripes, 40 + 20 * stripes], axis=-1)
    return img, mask


def generate(s: Scenario, out_dir) -> Path:
    """Write frames, masks, ground truth, attributes and metadata."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create {out}: {exc}") from None
    dims = s.dims
    dirs = pixel_grid_dirs(dims)
    bg = _background(dims, dirs, s.seed)
    cols: dict[str, list] = {"bbox": [], "rbbox": [], "bfov": [], "rbfov": []}
    analytic = []
    annos: list[Optional[FrameAnnotation]] = []
    for t in range(s.frames):
        img, mask = render_frame(s, t, dirs, bg)
        try:
            write_png(out / "frames" / f"{t:06d}.png", img)
            write_png(out / "masks" / f"{t:06d}.png", mask.astype(np.uint8) * 255)
        except OSError as exc:
            raise ValidationError(f"cannot write frame {t} under {out}: {exc}") from None
        vals = {
            "bbox": mask_to_bbox(mask, False),
            "rbbox": mask_to_bbox(mask, True),
            "bfov": mask_to_bfov(mask, False),
            "rbfov": mask_to_bfov(mask, True),
        }
        for k, v in vals.items():
            cols[k].append(v)
        analytic.append(s.analytic(t))
        annos.append(None if vals["bbox"] is None else FrameAnnotation(t, **vals))
    write_boxes(out / "bbox.txt", cols["bbox"])
    write_boxes(out / "rbbox.txt", cols["rbbox"])
    write_fovs(out / "bfov.txt", cols["bfov"])
    write_fovs(out / "rbfov.txt", cols["rbfov"])
    write_fovs(out / "analytic.txt", analytic)
    write_lines(out / "attributes.txt", compute_attributes(annos, dims).lines())
    write_lines(out / "scenario.txt", [f"{k}={v}" for k, v in asdict(s).items()])
    write_meta(out, dims, s.frames, s.name)
    return out
