"""On-disk sequence layout and annotation text formats.

A sequence directory holds ``frames/%06d.png`` (ERP), optional
``masks/%06d.png``, the four annotation files ``bbox.txt``, ``rbbox.txt``,
``bfov.txt``, ``rbfov.txt`` (one frame per line, comma separated, angles in
degrees, ``none`` for an absent target, ``#`` comments), ``attributes.txt``
(``NAME=0|1``) and ``meta.txt`` (``key=value``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import cv2
import numpy as np

from .annotations import REPRESENTATIONS, Bbox, Bfov, FrameAnnotation
from .errors import ValidationError
from .sphere import ErpDims

NONE_TOKEN = "none"
FRAME_PATTERN = "{:06d}.png"


def _fmt(x: float) -> str:
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _data_lines(path: Path) -> list[tuple[int, str]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                out.append((lineno, line))
    return out


def _parse_row(path: Path, lineno: int, line: str) -> Optional[list[float]]:
    if line.lower() == NONE_TOKEN:
        return None
    parts = [p.strip() for p in line.split(",")]
    if len(parts) == 4:
        parts.append("0")
    if len(parts) != 5:
        raise ValidationError(f"{path}:{lineno}: expected 5 comma-separated values, got {len(parts)}")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise ValidationError(f"{path}:{lineno}: {exc}") from None
    if not all(math.isfinite(v) for v in vals):
        raise ValidationError(f"{path}:{lineno}: non-finite value")
    return vals


def format_box(b: Optional[Bbox]) -> str:
    if b is None:
        return NONE_TOKEN
    return ",".join(_fmt(x) for x in (b.cx, b.cy, b.w, b.h, math.degrees(b.gamma)))


def format_fov(f: Optional[Bfov]) -> str:
    if f is None:
        return NONE_TOKEN
    return ",".join(_fmt(x) for x in f.degrees())


def read_boxes(path) -> list[Optional[Bbox]]:
    path = Path(path)
    out: list[Optional[Bbox]] = []
    for lineno, line in _data_lines(path):
        v = _parse_row(path, lineno, line)
        if v is None:
            out.append(None)
            continue
        if v[2] <= 0 or v[3] <= 0:
            raise ValidationError(f"{path}:{lineno}: box sides must be positive")
        out.append(Bbox(v[0], v[1], v[2], v[3], math.radians(v[4])))
    return out


def read_fovs(path) -> list[Optional[Bfov]]:
    path = Path(path)
    out: list[Optional[Bfov]] = []
    for lineno, line in _data_lines(path):
        v = _parse_row(path, lineno, line)
        if v is None:
            out.append(None)
            continue
        if v[2] <= 0 or v[3] <= 0:
            raise ValidationError(f"{path}:{lineno}: field of view must be positive")
        out.append(Bfov.from_degrees(*v))
    return out


def write_lines(path, lines: Sequence[str], header: Optional[str] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "".join(f"{ln}\n" for ln in lines)
    if header:
        text = f"# {header}\n" + text
    path.write_text(text, encoding="utf-8")


def write_boxes(path, boxes: Sequence[Optional[Bbox]]) -> None:
    write_lines(path, [format_box(b) for b in boxes], header="cx,cy,w,h,gamma_deg")


def write_fovs(path, fovs: Sequence[Optional[Bfov]]) -> None:
    write_lines(path, [format_fov(f) for f in fovs], header="clon_deg,clat_deg,theta_deg,phi_deg,gamma_deg")


def read_annotation_file(path, representation: str):
    return read_boxes(path) if representation in ("bbox", "rbbox") else read_fovs(path)


def write_annotation_file(path, representation: str, values) -> None:
    if representation in ("bbox", "rbbox"):
        write_boxes(path, values)
    else:
        write_fovs(path, values)


def read_keyvals(path) -> dict[str, str]:
    path = Path(path)
    out = {}
    for lineno, line in _data_lines(path):
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def read_attributes(path) -> dict[str, bool]:
    out = {}
    for k, v in read_keyvals(path).items():
        if v not in ("0", "1"):
            raise ValidationError(f"{path}: attribute {k} must be 0 or 1")
        out[k] = v == "1"
    return out


def read_png(path, grayscale: bool = False) -> np.ndarray:
    img = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE if grayscale else cv2.IMREAD_UNCHANGED)
    if img is None:
        raise ValidationError(f"cannot read image {path}")
    return img


def encode_png(img: np.ndarray) -> bytes:
    ok, buf = cv2.imencode(".png", img)
    if not ok:
        raise ValidationError("PNG encoding failed")
    return buf.tobytes()


def decode_png(data: bytes) -> np.ndarray:
    img = cv2.imdecode(np.frombuffer(data, np.uint8), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise ValidationError("PNG decoding failed")
    return img


def write_png(path, img: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_png(img))


def read_mask(path) -> np.ndarray:
    m = read_png(path, grayscale=True)
    return m > 127


@dataclass
class SequenceLayout:
    root: Path
    dims: ErpDims
    name: str
    fps: float
    n_frames: int

    @classmethod
    def open(cls, root) -> "SequenceLayout":
        root = Path(root)
        meta_path = root / "meta.txt"
        if not meta_path.exists():
            raise ValidationError(f"{root}: missing meta.txt")
        meta = read_keyvals(meta_path)
        try:
            dims = ErpDims.checked(int(meta["width"]), int(meta["height"]))
            n = int(meta.get("frames", len(list((root / "frames").glob("*.png")))))
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"{meta_path}: bad or missing field {exc}") from None
        return cls(root, dims, meta.get("name", root.name), float(meta.get("fps", 30)), n)

    def frame_path(self, i: int) -> Path:
        return self.root / "frames" / FRAME_PATTERN.format(i)

    def mask_path(self, i: int) -> Path:
        return self.root / "masks" / FRAME_PATTERN.format(i)

    def read_frame(self, i: int) -> np.ndarray:
        return read_png(self.frame_path(i))

    def annotation(self, representation: str):
        path = self.root / f"{representation}.txt"
        if not path.exists():
            return None
        values = read_annotation_file(path, representation)
        if len(values) != self.n_frames:
            raise ValidationError(f"{path}: {len(values)} lines for {self.n_frames} frames")
        return values

    def frame_annotations(self) -> list[Optional[FrameAnnotation]]:
        cols = {r: self.annotation(r) for r in REPRESENTATIONS}
        return assemble(cols, self.n_frames)


def assemble(cols: dict, n_frames: int) -> list[Optional[FrameAnnotation]]:
    """Zip per-representation columns into frame annotations (``None`` where
    every representation is absent)."""
    out: list[Optional[FrameAnnotation]] = []
    for i in range(n_frames):
        vals = {r: (cols[r][i] if cols.get(r) is not None else None) for r in REPRESENTATIONS}
        out.append(None if all(v is None for v in vals.values()) else FrameAnnotation(i, **vals))
    return out


def write_meta(root, dims: ErpDims, n_frames: int, name: str, fps: float = 30.0) -> None:
    write_lines(Path(root) / "meta.txt", [
        f"name={name}", f"width={dims.width}", f"height={dims.height}",
        f"frames={n_frames}", f"fps={fps:g}",
    ])
