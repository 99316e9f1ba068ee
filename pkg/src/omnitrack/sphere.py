"""Spherical camera model for equirectangular (ERP) images.

Conventions: camera frame with +Z forward, +X right, +Y down. Longitude is
``atan2(X, Z)`` in [-pi, pi), latitude is ``atan2(-Y, hypot(X, Z))``.
Pixel coordinates are continuous with u = 0 at the left edge of column 0,
so the centre of column 0 sits at u = 0.5.

Every function accepts scalars or numpy arrays and broadcasts.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi
_LAT_SLACK = 1e-12


class LonLat(NamedTuple):
    lon: float
    lat: float


class ErpDims(NamedTuple):
    width: int
    height: int

    @classmethod
    def checked(cls, width: int, height: int) -> "ErpDims":
        width, height = int(width), int(height)
        if width < 2 or width != 2 * height:
            raise DomainError(f"ERP dims must satisfy W = 2H >= 2, got {width}x{height}")
        return cls(width, height)


def wrap_lon(lon):
    """Canonical longitude in [-pi, pi)."""
    out = np.mod(np.asarray(lon, dtype=float) + math.pi, TWO_PI) - math.pi
    # mod can return TWO_PI - eps rounding up to exactly pi
    out = np.where(out >= math.pi, out - TWO_PI, out)
    return out if out.ndim else float(out)


def _clamp_lat(lat):
    lat = np.asarray(lat, dtype=float)
    if np.any(np.abs(lat) > HALF_PI + _LAT_SLACK):
        raise DomainError("latitude outside [-pi/2, pi/2]")
    out = np.clip(lat, -HALF_PI, HALF_PI)
    return out if out.ndim else float(out)


def sph_to_pix(lon, lat, dims: ErpDims):
    """Longitude/latitude (radians) to continuous ERP pixel coordinates."""
    w, h = dims
    u = (np.asarray(lon, dtype=float) / TWO_PI + 0.5) * w
    u = np.mod(u, w)
    u = np.where(u >= w, u - w, u)
    v = (-np.asarray(lat, dtype=float) / math.pi + 0.5) * h
    if u.ndim == 0:
        return float(u), float(v)
    return u, v


def pix_to_sph(u, v, dims: ErpDims):
    """Inverse of :func:`sph_to_pix`; ``u`` wraps, ``v`` must lie in [0, H]."""
    w, h = dims
    v = np.asarray(v, dtype=float)
    if np.any((v < 0) | (v > h)) or np.any(~np.isfinite(v)):
        raise DomainError(f"v outside [0, {h}]")
    lon = wrap_lon((np.asarray(u, dtype=float) / w - 0.5) * TWO_PI)
    lat = (0.5 - v / h) * math.pi
    if np.ndim(lat) == 0:
        return float(lon), float(lat)
    return lon, lat


def sph_to_vec(lon, lat) -> np.ndarray:
    """Unit vectors, shape ``(..., 3)``."""
    lon, lat = np.broadcast_arrays(np.asarray(lon, dtype=float), np.asarray(lat, dtype=float))
    cl = np.cos(lat)
    return np.stack([cl * np.sin(lon), -np.sin(lat), cl * np.cos(lon)], axis=-1)


def vec_to_sph(vec):
    """Directions ``(..., 3)`` to (lon, lat); inputs are normalised first."""
    vec = np.asarray(vec, dtype=float)
    norm = np.linalg.norm(vec, axis=-1)
    if np.any(norm == 0) or np.any(~np.isfinite(norm)):
        raise DomainError("cannot take the direction of a zero vector")
    x, y, z = np.moveaxis(vec / norm[..., None], -1, 0)
    lon = wrap_lon(np.arctan2(x, z))
    lat = np.arctan2(-y, np.hypot(x, z))
    if np.ndim(lat) == 0:
        return float(lon), float(lat)
    return lon, lat


def normalize(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=float)
    norm = np.linalg.norm(vec, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise DomainError("cannot normalise a zero vector")
    return vec / norm


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def frame_rotation(clon: float, clat: float, gamma: float = 0.0) -> np.ndarray:
    """``R_y(clon) @ R_x(clat) @ R_z(gamma)``: maps the local frame of a
    region centred at (clon, clat) with roll gamma into the camera frame."""
    return rot_y(clon) @ rot_x(clat) @ rot_z(gamma)


def apply(rot: np.ndarray, vec) -> np.ndarray:
    """Rotate directions stored along the last axis."""
    return np.asarray(vec, dtype=float) @ rot.T


def angular_distance(lon_a, lat_a, lon_b, lat_b):
    """Great-circle angle (radians, in [0, pi]) between two directions."""
    va = sph_to_vec(lon_a, lat_a)
    vb = sph_to_vec(lon_b, lat_b)
    return vec_angle(va, vb)


def vec_angle(va, vb):
    """Angle between (not necessarily unit) vectors.

    Uses atan2(|a x b|, a.b), which stays accurate for nearly parallel
    vectors where a clamped arccos loses half its digits.
    """
    va = np.asarray(va, dtype=float)
    vb = np.asarray(vb, dtype=float)
    cross = np.linalg.norm(np.cross(va, vb), axis=-1)
    dot = np.sum(va * vb, axis=-1)
    out = np.arctan2(cross, dot)
    return out if np.ndim(out) else float(out)


def pixel_grid_dirs(dims: ErpDims) -> np.ndarray:
    """Directions of every ERP pixel centre, shape ``(H, W, 3)``."""
    w, h = dims
    lon = ((np.arange(w) + 0.5) / w - 0.5) * TWO_PI
    lat = (0.5 - (np.arange(h) + 0.5) / h) * math.pi
    return sph_to_vec(lon[None, :], lat[:, None])


def pixel_lat(dims: ErpDims) -> np.ndarray:
    """Latitude of each pixel-centre row, shape ``(H,)``."""
    h = dims.height
    return (0.5 - (np.arange(h) + 0.5) / h) * math.pi
