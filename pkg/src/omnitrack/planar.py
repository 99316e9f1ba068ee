"""Planar helpers: convex hull, minimum-area enclosing rectangle and convex
polygon clipping."""
from __future__ import annotations

import math

import numpy as np

from .annotations import canonical_gamma
from .errors import DomainError


def convex_hull(points) -> np.ndarray:
    """Andrew's monotone chain; counter-clockwise in a y-up frame, no
    repeated or collinear vertices.  Degenerate inputs give 1 or 2 points."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        return pts

    def half(seq):
        out: list = []
        for p in seq:
            while len(out) >= 2:
                o, a = out[-2], out[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) > 0:
                    break
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def min_area_rect(points) -> tuple[float, float, float, float, float]:
    """Globally minimal-area rectangle enclosing ``points``.

    One side of the optimum is flush with a hull edge, so every edge is a
    calipers stop and the smallest of them wins.  Returns
    ``(cx, cy, w, h, gamma)`` with ``w`` measured along angle ``gamma``
    (radians, in (-pi/2, pi/2]).  Collinear input yields ``h == 0``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise DomainError("min_area_rect needs at least one point")
    hull = convex_hull(pts)
    if len(hull) == 1:
        return float(hull[0, 0]), float(hull[0, 1]), 0.0, 0.0, 0.0
    if len(hull) == 2:
        d = hull[1] - hull[0]
        ang = math.atan2(d[1], d[0])
        g, w, h = canonical_gamma(ang, float(np.hypot(*d)), 0.0)
        c = hull.mean(axis=0)
        return float(c[0]), float(c[1]), w, h, g

    edges = np.roll(hull, -1, axis=0) - hull
    angles = np.mod(np.arctan2(edges[:, 1], edges[:, 0]), 0.5 * math.pi)
    angles = np.unique(np.round(angles, 15))
    best = None
    for chunk in np.array_split(angles, max(1, len(angles) // 256 + 1)):
        c, s = np.cos(chunk), np.sin(chunk)
        # projections on the rotated axes: (n_angles, n_hull)
        pu = np.outer(c, hull[:, 0]) + np.outer(s, hull[:, 1])
        pv = np.outer(-s, hull[:, 0]) + np.outer(c, hull[:, 1])
        umin, umax = pu.min(axis=1), pu.max(axis=1)
        vmin, vmax = pv.min(axis=1), pv.max(axis=1)
        area = (umax - umin) * (vmax - vmin)
        i = int(np.argmin(area))
        if best is None or area[i] < best[0] - 1e-12 * max(1.0, best[0]):
            best = (area[i], chunk[i], umin[i], umax[i], vmin[i], vmax[i])
    _, a, umin, umax, vmin, vmax = best
    c, s = math.cos(a), math.sin(a)
    mu, mv = 0.5 * (umin + umax), 0.5 * (vmin + vmax)
    cx = c * mu - s * mv
    cy = s * mu + c * mv
    g, w, h = canonical_gamma(float(a), float(umax - umin), float(vmax - vmin))
    return float(cx), float(cy), w, h, g


def polygon_area(poly) -> float:
    p = np.asarray(poly, dtype=float)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _orient_ccw(poly: np.ndarray) -> np.ndarray:
    x, y = poly[:, 0], poly[:, 1]
    signed = np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))
    return poly if signed >= 0 else poly[::-1]


def clip_convex(subject, clipper) -> np.ndarray:
    """Sutherland-Hodgman intersection of two convex polygons."""
    out = [tuple(p) for p in _orient_ccw(np.asarray(subject, dtype=float))]
    clip = _orient_ccw(np.asarray(clipper, dtype=float))
    n = len(clip)
    for i in range(n):
        if not out:
            break
        a, b = clip[i], clip[(i + 1) % n]
        ex, ey = b[0] - a[0], b[1] - a[1]

        def side(p):
            return ex * (p[1] - a[1]) - ey * (p[0] - a[0])

        inp, out = out, []
        prev = inp[-1]
        sp = side(prev)
        for cur in inp:
            sc = side(cur)
            if sc >= 0:
                if sp < 0:
                    t = sp / (sp - sc)
                    out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
                out.append(cur)
            elif sp >= 0:
                t = sp / (sp - sc)
                out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
            prev, sp = cur, sc
    return np.array(out, dtype=float).reshape(-1, 2)
