"""Target-location representations: (r)BBox on the ERP image and (r)BFoV
on the sphere.  All angles are radians; degrees only appear at I/O."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ValidationError
from .sphere import ErpDims, TWO_PI, wrap_lon

_EPS = 1e-12
_QUARTER = 0.5 * math.pi


@dataclass(frozen=True)
class Bbox:
    """Centre-based pixel rectangle; ``gamma`` rotates the width axis from
    +u towards +v (clockwise on screen).  ``gamma == 0`` is a plain BBox."""

    cx: float
    cy: float
    w: float
    h: float
    gamma: float = 0.0

    @property
    def area(self) -> float:
        return self.w * self.h

    def corners(self) -> np.ndarray:
        """Four corners, shape (4, 2), in (u, v) order around the rectangle."""
        c, s = math.cos(self.gamma), math.sin(self.gamma)
        ax = np.array([c, s]) * (self.w / 2)
        ay = np.array([-s, c]) * (self.h / 2)
        ctr = np.array([self.cx, self.cy])
        return np.array([ctr - ax - ay, ctr + ax - ay, ctr + ax + ay, ctr - ax + ay])

    def shifted(self, du: float) -> "Bbox":
        return replace(self, cx=self.cx + du)

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h, self.gamma)


@dataclass(frozen=True)
class Bfov:
    """Angular region ``[clon, clat, theta, phi, gamma]``; ``gamma == 0`` is a
    plain BFoV."""

    clon: float
    clat: float
    theta: float
    phi: float
    gamma: float = 0.0

    @classmethod
    def from_degrees(cls, clon, clat, theta, phi, gamma=0.0) -> "Bfov":
        r = math.radians
        return cls(r(clon), r(clat), r(theta), r(phi), r(gamma))

    def degrees(self) -> tuple[float, float, float, float, float]:
        d = math.degrees
        return (d(self.clon), d(self.clat), d(self.theta), d(self.phi), d(self.gamma))

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.clon, self.clat, self.theta, self.phi, self.gamma)


def canonical_gamma(gamma: float, w: float, h: float) -> tuple[float, float, float]:
    """Reduce a rectangle angle into (-pi/2, pi/2] by quarter turns, swapping
    the sides on every odd quarter turn."""
    q = gamma / _QUARTER
    if gamma > _QUARTER:
        k = math.ceil(q - 1.0)
    elif gamma <= -_QUARTER:
        k = math.ceil(q)
    else:
        k = 0
    g = gamma - k * _QUARTER
    # float noise can leave g one ulp outside the band
    if g > _QUARTER:
        g, k = g - _QUARTER, k + 1
    elif g <= -_QUARTER:
        g, k = g + _QUARTER, k - 1
    if k % 2:
        w, h = h, w
    return g, w, h


def canonicalize_bbox(b: Bbox, dims: ErpDims) -> Bbox:
    if not (b.w > 0 and b.h > 0):
        raise ValidationError(f"box sides must be positive, got w={b.w}, h={b.h}")
    g, w, h = canonical_gamma(b.gamma, b.w, b.h)
    cx = math.fmod(b.cx, dims.width)
    if cx < 0:
        cx += dims.width
    if cx >= dims.width:
        cx -= dims.width
    return Bbox(cx, b.cy, w, h, g)


def validate_bfov(f: Bfov) -> Bfov:
    if not (0 < f.theta <= TWO_PI + _EPS):
        raise ValidationError(f"theta must lie in (0, 360] degrees, got {math.degrees(f.theta):.6g}")
    if not (0 < f.phi <= math.pi + _EPS):
        raise ValidationError(f"phi must lie in (0, 180] degrees, got {math.degrees(f.phi):.6g}")
    if abs(f.clat) > 0.5 * math.pi + _EPS:
        raise ValidationError(f"clat outside [-90, 90] degrees: {math.degrees(f.clat):.6g}")
    if not all(math.isfinite(x) for x in f.as_tuple()):
        raise ValidationError("non-finite BFoV component")
    return f


def canonicalize_bfov(f: Bfov) -> Bfov:
    validate_bfov(f)
    return Bfov(
        float(wrap_lon(f.clon)),
        max(-0.5 * math.pi, min(0.5 * math.pi, f.clat)),
        min(f.theta, TWO_PI),
        min(f.phi, math.pi),
        f.gamma,
    )


@dataclass
class FrameAnnotation:
    """Every representation known for one frame."""

    index: int
    bbox: Optional[Bbox] = None
    rbbox: Optional[Bbox] = None
    bfov: Optional[Bfov] = None
    rbfov: Optional[Bfov] = None
    mask: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if all(x is None for x in (self.bbox, self.rbbox, self.bfov, self.rbfov, self.mask)):
            raise ValidationError(f"frame {self.index}: annotation without any representation")

    def get(self, repr_name: str):
        if repr_name not in REPRESENTATIONS:
            raise ValidationError(f"unknown representation {repr_name!r}")
        return getattr(self, repr_name)


REPRESENTATIONS = ("bbox", "rbbox", "bfov", "rbfov")
