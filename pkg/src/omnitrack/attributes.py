"""Sequence attributes computable from the annotation stream."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .annotations import FrameAnnotation
from .errors import ValidationError
from .metrics import angle_precision, precision_dual
from .sphere import ErpDims

ATTRIBUTE_NAMES = (
    "IV", "BC", "DEF", "MB", "CM", "ROT", "POC", "FOC", "ARC", "SV",
    "FM", "LR", "HR", "SA", "CB", "FMS", "LFoV", "LV", "HL", "LD",
)
COMPUTED = ("ARC", "SV", "FM", "LR", "HR", "CB", "FMS", "LFoV", "LV", "HL")

LR_AREA = 1000.0
HR_AREA = 500.0 ** 2
RATIO_RANGE = (0.5, 2.0)
LFOV_DEG = 90.0
LV_DEG = 50.0
HL_DEG = 60.0

_BOX_RULES = ("ARC", "SV", "FM", "LR", "HR", "CB")
_FOV_RULES = ("FMS", "LFoV", "LV", "HL")


@dataclass
class AttributeSet:
    flags: dict[str, bool]
    per_frame: dict[str, list[bool]] = field(default_factory=dict)

    def lines(self) -> list[str]:
        return [f"{name}={int(self.flags.get(name, False))}" for name in ATTRIBUTE_NAMES]


def _outside(ratio: float, lo_hi=RATIO_RANGE) -> bool:
    return not (lo_hi[0] <= ratio <= lo_hi[1])


def compute_attributes(frames: Sequence[Optional[FrameAnnotation]], dims: ErpDims,
                       manual: Optional[Mapping[str, bool]] = None) -> AttributeSet:
    """Per-sequence flags: a rule fires if it holds on at least one frame.

    ``None`` entries (target absent) are skipped; motion rules compare
    consecutive present frames.
    """
    present = [f for f in frames if f is not None]
    for rule in _BOX_RULES:
        for f in present:
            if f.bbox is None:
                raise ValidationError(f"rule {rule} needs a BBox on frame {f.index}")
    for rule in _FOV_RULES:
        for f in present:
            if f.bfov is None:
                raise ValidationError(f"rule {rule} needs a BFoV on frame {f.index}")

    trace: dict[str, list[bool]] = {name: [] for name in COMPUTED}
    if present:
        b0 = present[0].bbox
        ar0, area0 = b0.w / b0.h, b0.w * b0.h
        lats = [f.bfov.clat for f in present]
        lat_span = math.degrees(max(lats) - min(lats))
    prev = None
    for f in present:
        b, fov = f.bbox, f.bfov
        area = b.w * b.h
        trace["ARC"].append(_outside((b.w / b.h) / ar0))
        trace["SV"].append(_outside(area / area0))
        trace["LR"].append(area < LR_AREA)
        trace["HR"].append(area > HR_AREA)
        trace["CB"].append(b.cx - b.w / 2 < 0 or b.cx + b.w / 2 > dims.width)
        trace["LFoV"].append(max(math.degrees(fov.theta), math.degrees(fov.phi)) > LFOV_DEG)
        trace["HL"].append(abs(math.degrees(fov.clat)) > HL_DEG)
        trace["LV"].append(lat_span > LV_DEG)
        if prev is None:
            trace["FM"].append(False)
            trace["FMS"].append(False)
        else:
            pb, pf = prev.bbox, prev.bfov
            trace["FM"].append(precision_dual(pb, b, dims) > math.sqrt(pb.w * pb.h))
            motion = angle_precision((pf.clon, pf.clat), (fov.clon, fov.clat))
            trace["FMS"].append(motion > max(math.degrees(pf.theta), math.degrees(pf.phi)))
        prev = f

    flags = {name: False for name in ATTRIBUTE_NAMES}
    for name in COMPUTED:
        flags[name] = any(trace[name])
    for name, value in (manual or {}).items():
        if name not in ATTRIBUTE_NAMES:
            raise ValidationError(f"unknown attribute {name!r}")
        if name in COMPUTED:
            raise ValidationError(f"attribute {name} is computed, not manual")
        flags[name] = bool(value)
    return AttributeSet(flags, trace)
