"""Oracle local tracker for synthetic sequences.

It ignores pixels: for each request it reads the harness sidecar (frame
index, search BFoV, region mode, local size), projects the frame's ground
truth region into that local image and answers with its bounding box.
Optional eastward bias and pixel quantisation model an imperfect tracker.

Run as ``python -m omnitrack.oracle --seq DIR [--bias DEG]``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .adapter import SIDECAR_ENV, serve
from .annotations import Bbox, Bfov
from .dataset import read_fovs
from .errors import AdapterError
from .harness import local_box_of_region
from .region import RegionMap, build_region
from .sphere import ErpDims, frame_rotation, sph_to_vec, vec_to_sph


def shift_east(f: Bfov, bias: float) -> Bfov:
    """Move a region by ``bias`` radians along the great circle heading east
    from its centre."""
    if bias == 0.0:
        return f
    lon, lat = vec_to_sph(frame_rotation(f.clon, f.clat) @ sph_to_vec(bias, 0.0))
    return Bfov(lon, lat, f.theta, f.phi, f.gamma)


class OracleTracker:
    def __init__(self, targets: list[Optional[Bfov]], sidecar: str, dims: ErpDims,
                 bias_deg: float = 0.0, quantize: bool = False):
        self.targets = targets
        self.sidecar = sidecar
        self.dims = dims
        self.bias = math.radians(bias_deg)
        self.quantize = quantize
        self.last: Optional[Bbox] = None

    def _region(self) -> tuple[int, RegionMap]:
        try:
            with open(self.sidecar, encoding="utf-8") as fh:
                info = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise AdapterError(f"cannot read sidecar {self.sidecar}: {exc}") from None
        search = Bfov.from_degrees(*info["search_bfov_deg"])
        # only the analytic inverse is used, so a 2x2 grid is enough
        rm = build_region(search, self.dims, shape=(2, 2), mode=info["mode"])
        rm = RegionMap(rm.bfov, rm.dims, rm.mode, np.broadcast_to(np.zeros(3), (info["height"], info["width"], 3)), rm.forced)
        return int(info["frame"]), rm

    def _answer(self) -> Bbox:
        t, rm = self._region()
        target = self.targets[t] if 0 <= t < len(self.targets) else None
        box = None
        if target is not None:
            box = local_box_of_region(shift_east(target, self.bias), rm, n_per_edge=128)
        if box is None:
            if self.last is None:
                raise AdapterError(f"frame {t}: target not visible")
            return self.last
        if self.quantize:
            x0, x1 = round(box.cx - box.w / 2), round(box.cx + box.w / 2)
            y0, y1 = round(box.cy - box.h / 2), round(box.cy + box.h / 2)
            x1, y1 = max(x1, x0 + 1), max(y1, y0 + 1)
            box = Bbox(0.5 * (x0 + x1), 0.5 * (y0 + y1), float(x1 - x0), float(y1 - y0), 0.0)
        self.last = box
        return box

    def init(self, image, box: Bbox) -> None:
        self.last = box

    def track(self, image) -> tuple[Bbox, float]:
        return self._answer(), 1.0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m omnitrack.oracle", description=__doc__.splitlines()[0])
    ap.add_argument("--seq", required=True, help="synthetic sequence directory")
    ap.add_argument("--source", choices=("gt", "analytic"), default="gt",
                    help="answer from bfov.txt (default) or from the generating region")
    ap.add_argument("--bias", type=float, default=0.0, help="eastward offset in degrees")
    ap.add_argument("--quantize", action="store_true", help="snap boxes to whole local pixels")
    ap.add_argument("--sidecar", default=os.environ.get(SIDECAR_ENV))
    args = ap.parse_args(argv)
    if not args.sidecar:
        print("oracle: no sidecar path (set OMNITRACK_SIDECAR)", file=sys.stderr)
        return 2
    from .dataset import SequenceLayout
    seq = SequenceLayout.open(args.seq)
    targets = read_fovs(Path(args.seq) / ("bfov.txt" if args.source == "gt" else "analytic.txt"))
    tracker = OracleTracker(targets, args.sidecar, seq.dims, args.bias, args.quantize)
    return serve(tracker, name=f"oracle(bias={args.bias:g})")


if __name__ == "__main__":
    sys.exit(main())
