"""omnitrack command line.

Exit codes: 0 ok, 2 input or validation error, 3 adapter or runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from pathlib import Path

from .adapter import DEFAULT_TIMEOUT, AdapterProcess
from .annotations import REPRESENTATIONS, Bfov, FrameAnnotation, validate_bfov
from .dataset import (SequenceLayout, read_annotation_file, read_mask, read_png, write_annotation_file,
                      write_png)
from .errors import AdapterError, DomainError, ValidationError
from .harness import EXTENDED, FORCE_TANGENT, HarnessConfig, run_ope, write_results
from .masks import mask_to_bbox, mask_to_bfov
from .metrics import FramePair, ope_evaluate
from .region import TANGENT, build_region, unwarp
from .render import render_frame
from .sphere import ErpDims
from .synth import PRESETS, generate, parse_scenario

log = logging.getLogger("omnitrack")

EXIT_OK, EXIT_INPUT, EXIT_ADAPTER = 0, 2, 3


def _parse_bfov(text: str) -> Bfov:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise ValidationError(f"BFoV must be comma-separated numbers, got {text!r}") from None
    if len(vals) not in (4, 5):
        raise ValidationError("BFoV needs clon,clat,theta,phi[,gamma] in degrees")
    return validate_bfov(Bfov.from_degrees(*vals))


def _default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


# --- unwarp -----------------------------------------------------------------

def cmd_unwarp(args) -> int:
    frame = read_png(args.input)
    dims = ErpDims.checked(frame.shape[1], frame.shape[0])
    f = _parse_bfov(args.bfov)
    shape = (args.height, args.width) if args.width and args.height else None
    rm = build_region(f, dims, shape=shape, mode=TANGENT if args.mode == "tangent" else None, ppd=args.ppd)
    write_png(args.out, unwarp(frame, rm))
    print(f"{rm.mode} region {rm.shape[1]}x{rm.shape[0]} -> {args.out}")
    return EXIT_OK


# --- mask2anno --------------------------------------------------------------

def _convert_mask(job):
    path, rotated = job
    try:
        m = read_mask(path)
        out = {"bbox": mask_to_bbox(m, False), "bfov": mask_to_bfov(m, False)}
        if rotated:
            out["rbbox"] = mask_to_bbox(m, True)
            out["rbfov"] = mask_to_bfov(m, True)
        return out, None
    except (ValidationError, DomainError, OSError) as exc:
        return None, f"{path}: {exc}"


def cmd_mask2anno(args) -> int:
    paths = sorted(Path(args.masks).glob("*.png"))
    if not paths:
        raise ValidationError(f"no PNG masks in {args.masks}")
    rotated = args.rotated == "on"
    jobs = [(p, rotated) for p in paths]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_convert_mask, jobs, chunksize=8))
    else:
        results = [_convert_mask(j) for j in jobs]
    errors = [e for _, e in results if e]
    reprs = REPRESENTATIONS if rotated else ("bbox", "bfov")
    out = Path(args.out)
    for r in reprs:
        write_annotation_file(out / f"{r}.txt", r, [None if v is None else v[r] for v, _ in results])
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    print(f"converted {len(paths) - len(errors)}/{len(paths)} masks -> {out}")
    return EXIT_INPUT if errors else EXIT_OK


# --- eval -------------------------------------------------------------------

def evaluate_files(seq_dir, results, representation: str, jobs: int = 1):
    seq = SequenceLayout.open(seq_dir)
    gt = seq.frame_annotations()
    path = Path(results)
    if path.is_dir():
        path = path / f"{representation}.txt"
    if not path.exists():
        raise ValidationError(f"results file {path} not found")
    values = read_annotation_file(path, representation)
    if not values:
        raise ValidationError(f"{path}: no result lines")
    if len(values) != len(gt):
        raise ValidationError(f"{path}: {len(values)} result lines for {len(gt)} ground-truth frames")
    pairs = [FramePair(g, None if v is None else FrameAnnotation(i, **{representation: v}), seq.dims)
             for i, (g, v) in enumerate(zip(gt, values))]
    return ope_evaluate(pairs, representation, jobs=jobs)


def cmd_eval(args) -> int:
    report = evaluate_files(args.gt, args.results, args.repr, args.jobs)
    doc = {"sequence": Path(args.gt).name, "results": str(args.results), **report.to_dict()}
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    for k, v in report.headline().items():
        print(f"{k}: {v:.3f}")
    return EXIT_OK


# --- run --------------------------------------------------------------------

def run_sequence(seq_dir, adapter_cmd: str, cfg: HarnessConfig, out_dir, timeout: float = DEFAULT_TIMEOUT):
    seq = SequenceLayout.open(seq_dir)
    annos = seq.frame_annotations()
    if not annos or annos[0] is None:
        raise ValidationError(f"{seq_dir}: first frame has no annotation to initialise from")
    frames = [seq.read_frame(i) for i in range(seq.n_frames)]
    command = adapter_cmd.replace("{seq}", str(Path(seq_dir).resolve()))
    with tempfile.TemporaryDirectory(prefix="omnitrack-") as tmp:
        sidecar = str(Path(tmp) / "search.json")
        with AdapterProcess(command, timeout=timeout, sidecar=sidecar) as adapter:
            steps = run_ope(frames, annos[0], cfg, adapter, dims=seq.dims, sidecar=sidecar)
    write_results(out_dir, steps)
    return steps


def cmd_run(args) -> int:
    cfg = HarnessConfig(context_scale=args.k, mode=args.mode)
    seqs = args.seq
    outs = [Path(args.out)] if len(seqs) == 1 else [Path(args.out) / Path(s).name for s in seqs]

    def one(pair):
        s, o = pair
        steps = run_sequence(s, args.adapter, cfg, o, args.timeout)
        failed = sum(st.failed for st in steps)
        return f"{s}: {len(steps)} frames, {failed} failed -> {o}"

    with ThreadPoolExecutor(max_workers=max(1, min(args.jobs, len(seqs)))) as pool:
        for line in pool.map(one, zip(seqs, outs)):
            print(line)
    return EXIT_OK


# --- synth / render ---------------------------------------------------------

def cmd_synth(args) -> int:
    if args.list:
        for name, s in PRESETS.items():
            print(f"{name}: {s.trajectory}, {s.target}, radius {s.radius_deg:g} deg")
        return EXIT_OK
    if not args.scenario or not args.out:
        raise ValidationError("synth needs --scenario and --out")
    out = generate(parse_scenario(args.scenario), args.out)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_render(args) -> int:
    seq = SequenceLayout.open(args.seq)
    gt = seq.annotation(args.repr) or [None] * seq.n_frames
    res = [None] * seq.n_frames
    if args.results:
        path = Path(args.results)
        if path.is_dir():
            path = path / f"{args.repr}.txt"
        res = read_annotation_file(path, args.repr)
        if len(res) != seq.n_frames:
            raise ValidationError(f"{path}: {len(res)} lines for {seq.n_frames} frames")
    out = Path(args.out)
    n = 0
    for i in range(0, seq.n_frames, max(1, args.every)):
        write_png(out / f"{i:06d}.png", render_frame(seq.read_frame(i), gt[i], res[i]))
        n += 1
    print(f"rendered {n} frames -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="omnitrack", description="360 tracking toolkit")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("unwarp", help="extract a local image for a BFoV")
    p.add_argument("--input", required=True)
    p.add_argument("--bfov", required=True, help="clon,clat,theta,phi[,gamma] in degrees")
    p.add_argument("--mode", choices=("extended", "tangent"), default="extended")
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--ppd", type=float, help="local pixels per degree")
    p.set_defaults(func=cmd_unwarp)

    p = sub.add_parser("mask2anno", help="convert masks to the four annotation files")
    p.add_argument("--masks", required=True)
    p.add_argument("--rotated", choices=("on", "off"), default="on")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(func=cmd_mask2anno)

    p = sub.add_parser("eval", help="score results against a sequence's ground truth")
    p.add_argument("--gt", required=True, help="sequence directory")
    p.add_argument("--results", required=True, help="results file or directory")
    p.add_argument("--repr", choices=REPRESENTATIONS, default="bbox")
    p.add_argument("--out", help="JSON report path")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", help="track sequences through an adapter")
    p.add_argument("--seq", required=True, nargs="+")
    p.add_argument("--adapter", required=True, help="adapter command; {seq} expands to the sequence path")
    p.add_argument("--mode", choices=(EXTENDED, FORCE_TANGENT), default=EXTENDED)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=float, default=2.0, help="search context scale")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth", help="generate a synthetic sequence")
    p.add_argument("--scenario", help="preset[:key=value,...]")
    p.add_argument("--out")
    p.add_argument("--list", action="store_true", help="list presets")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("render", help="draw gt and result boundaries on frames")
    p.add_argument("--seq", required=True)
    p.add_argument("--results")
    p.add_argument("--repr", choices=REPRESENTATIONS, default="bfov")
    p.add_argument("--out", required=True)
    p.add_argument("--every", type=int, default=1)
    p.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except AdapterError as exc:
        print(f"adapter error: {exc}", file=sys.stderr)
        return EXIT_ADAPTER
    except (ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
