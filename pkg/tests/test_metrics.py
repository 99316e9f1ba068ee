import math

import numpy as np
import pytest

from omnitrack.annotations import Bbox, Bfov, FrameAnnotation
from omnitrack.errors import ValidationError
from omnitrack.metrics import (FramePair, angle_precision, box_center_lonlat, iou_bbox, merge_reports,
                               normalized_precision_dual, ope_evaluate, precision_dual, sphere_iou, success_curve,
                               success_dual)
from omnitrack.sphere import ErpDims, sph_to_vec, vec_to_sph

D = ErpDims(3840, 1920)


def test_iou_examples():
    a = Bbox(50, 50, 20, 10)
    assert iou_bbox(a, a) == pytest.approx(1)
    assert iou_bbox(a, Bbox(500, 50, 20, 10)) == 0
    assert iou_bbox(Bbox(0.5, 0.5, 1, 1), Bbox(1.0, 0.5, 1, 1)) == pytest.approx(1 / 3)


def test_rotated_iou_matches_sampling(rng):
    a = Bbox(10, 10, 8, 4, 0.4)
    b = Bbox(11, 9, 6, 6, -0.3)
    p = rng.uniform(0, 20, size=(400_000, 2))

    def inside(box):
        d = p - [box.cx, box.cy]
        c, s = math.cos(box.gamma), math.sin(box.gamma)
        return (np.abs(d[:, 0] * c + d[:, 1] * s) <= box.w / 2) & (np.abs(-d[:, 0] * s + d[:, 1] * c) <= box.h / 2)

    ia, ib = inside(a), inside(b)
    assert iou_bbox(a, b) == pytest.approx((ia & ib).sum() / (ia | ib).sum(), abs=0.01)


def test_dual_examples():
    gt = Bbox(0, 960, 100, 50)
    tr = Bbox(3840, 960, 100, 50)
    assert iou_bbox(gt, tr) == 0
    assert success_dual(gt, tr, D) == pytest.approx(1)
    assert precision_dual(gt, tr, D) == pytest.approx(0)
    assert success_dual(gt, Bbox(1920, 960, 100, 50), D) == 0
    inner = Bbox(1000, 900, 100, 50)
    assert success_dual(inner, Bbox(1010, 905, 100, 50), D) == pytest.approx(iou_bbox(inner, Bbox(1010, 905, 100, 50)))
    assert normalized_precision_dual(Bbox(1000, 900, 100, 50), Bbox(1010, 900, 100, 50), D) == pytest.approx(0.1)


def test_dual_never_below_plain(rng):
    for _ in range(500):
        g = Bbox(rng.uniform(0, 3840), rng.uniform(0, 1920), rng.uniform(5, 400), rng.uniform(5, 400))
        t = Bbox(rng.uniform(0, 3840), rng.uniform(0, 1920), rng.uniform(5, 400), rng.uniform(5, 400))
        assert success_dual(g, t, D) >= iou_bbox(g, t)


def test_angle_examples():
    assert angle_precision((0.3, 0.1), (0.3, 0.1)) == 0
    a = box_center_lonlat(Bbox(0, 30, 2, 2), D)
    b = box_center_lonlat(Bbox(3839, 30, 2, 2), D)
    # pixels (0, 30) and (3839, 30): 0.09375 deg of longitude at 87.1875 deg latitude
    assert angle_precision(a, b) == pytest.approx(0.0046, abs=1e-4)
    assert angle_precision((0, math.radians(89)), (math.pi, math.radians(89))) == pytest.approx(2.0)


def test_sphere_iou_examples():
    a = Bfov.from_degrees(0, 0, 20, 20)
    assert sphere_iou(a, a) == pytest.approx(1)
    assert sphere_iou(a, Bfov.from_degrees(180, 0, 20, 20)) == 0
    nested = sphere_iou(Bfov.from_degrees(0, 0, 120, 60), Bfov.from_degrees(0, 0, 240, 60))
    assert nested == pytest.approx(0.5, abs=0.01)


def test_sphere_iou_symmetric_and_rotation_invariant(rng):
    for _ in range(10):
        a = Bfov.from_degrees(rng.uniform(-180, 180), rng.uniform(-60, 60), rng.uniform(10, 60), rng.uniform(10, 60), rng.uniform(-45, 45))
        b = Bfov(a.clon + 0.05, a.clat - 0.03, a.theta * 1.1, a.phi, a.gamma)
        assert sphere_iou(a, b) == sphere_iou(b, a)
        # rotate both about the vertical axis
        sh = rng.uniform(-1, 1)
        a2 = Bfov(a.clon + sh, a.clat, a.theta, a.phi, a.gamma)
        b2 = Bfov(b.clon + sh, b.clat, b.theta, b.phi, b.gamma)
        assert sphere_iou(a2, b2) == pytest.approx(sphere_iou(a, b), abs=1e-9)


def tangent_area(f):
    return 4 * math.asin(math.sin(f.theta / 2) * math.sin(f.phi / 2))


def test_sphere_iou_tracks_analytic_ratio():
    a = Bfov.from_degrees(0, 0, 20, 20)
    for e in (0.01, 0.03, 0.1, 0.5, 3.0):
        b = Bfov.from_degrees(0, 0, 20 + e, 20 + e / 2)
        # nested tangent regions: IoU is the ratio of their closed-form areas
        assert sphere_iou(a, b) == pytest.approx(tangent_area(a) / tangent_area(b), abs=3e-4)


def test_success_curve_rule():
    c = success_curve([1.0, 0.0])
    assert c[0] == 0.5 and c[-1] == 0.5
    assert success_curve([1.0]).mean() == 1.0


def _pairs(gts, trs, dims=D):
    return [FramePair(None if g is None else FrameAnnotation(i, bbox=g[0], bfov=g[1]),
                      None if t is None else FrameAnnotation(i, bbox=t[0], bfov=t[1]), dims)
            for i, (g, t) in enumerate(zip(gts, trs))]


def _stream(n=10):
    out = []
    for i in range(n):
        f = Bfov.from_degrees(-20 + 3 * i, 10, 20, 15)
        out.append((Bbox(1500 + 30 * i, 800, 200, 150), f))
    return out


def test_ope_identity():
    g = _stream()
    for rep in ("bbox", "bfov"):
        r = ope_evaluate(_pairs(g, g), rep)
        assert all(v == pytest.approx(1.0) for v in r.scalars.values()), r.scalars
        assert r.frames == list(range(1, 10))


def test_ope_lon_offset_misses():
    g = _stream()
    t = [(b, Bfov(f.clon + math.radians(4), f.clat, f.theta, f.phi)) for b, f in g]
    r = ope_evaluate(_pairs(g, t), "bfov")
    assert r.scalars["P_angle"] == 0.0


def test_ope_half_antipodal():
    g = _stream(11)
    t = []
    for i, (b, f) in enumerate(g):
        if i % 2:
            t.append((b, f))
        else:
            lon, lat = vec_to_sph(-sph_to_vec(f.clon, f.clat))
            t.append((b, Bfov(lon, lat, f.theta, f.phi)))
    r = ope_evaluate(_pairs(g, t), "bfov")
    assert r.scalars["S_sphere(AUC)"] == pytest.approx(0.5)


def test_ope_missing_frames():
    g = _stream(5)
    t = list(g)
    t[2] = None
    g2 = list(g)
    g2[3] = None
    r = ope_evaluate(_pairs(g2, t), "bbox")
    assert r.frames == [1, 2, 4]
    assert r.per_frame["S_dual"][1] == 0.0
    with pytest.raises(ValidationError):
        ope_evaluate([], "bbox")


def test_ope_jobs_do_not_change_result():
    g = _stream(12)
    t = [(Bbox(b.cx + 5, b.cy, b.w, b.h), Bfov(f.clon + 0.01, f.clat, f.theta, f.phi)) for b, f in g]
    a = ope_evaluate(_pairs(g, t), "bfov", jobs=1).to_dict()
    b = ope_evaluate(_pairs(g, t), "bfov", jobs=4).to_dict()
    assert a == b


def test_merge_reports():
    g = _stream()
    r = ope_evaluate(_pairs(g, g), "bbox")
    assert merge_reports([r, r])["S_dual(AUC)"] == pytest.approx(1.0)
