"""Line-delimited JSON protocol between the tracking harness and an external
local tracker process (stdin/stdout).

Every control message is one UTF-8 JSON object per line.  ``init`` and
``track`` headers are followed by exactly ``image_bytes`` bytes of PNG.
Boxes are ``[cx, cy, w, h, gamma_deg]`` in local-image pixels.
"""
from __future__ import annotations

import json
import math
import os
import queue
import shlex
import subprocess
import sys
import threading
from typing import BinaryIO, Optional, Protocol

import numpy as np

from .annotations import Bbox
from .dataset import decode_png, encode_png
from .errors import AdapterError

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT = 30.0
SIDECAR_ENV = "OMNITRACK_SIDECAR"


class LocalTracker(Protocol):
    """What the harness needs from a tracker, in-process or not."""

    def init(self, image: np.ndarray, box: Bbox) -> None: ...

    def track(self, image: np.ndarray) -> tuple[Bbox, float]: ...


def box_to_wire(b: Bbox) -> list[float]:
    return [b.cx, b.cy, b.w, b.h, math.degrees(b.gamma)]


def box_from_wire(v) -> Bbox:
    if not isinstance(v, list) or len(v) != 5:
        raise AdapterError(f"bbox must be a list of 5 numbers, got {v!r}")
    try:
        cx, cy, w, h, g = (float(x) for x in v)
    except (TypeError, ValueError):
        raise AdapterError(f"bbox must be numeric, got {v!r}") from None
    if not all(math.isfinite(x) for x in (cx, cy, w, h, g)):
        raise AdapterError("bbox has non-finite values")
    return Bbox(cx, cy, w, h, math.radians(g))


class AdapterProcess:
    """Harness-side client for an adapter subprocess."""

    def __init__(self, command, timeout: float = DEFAULT_TIMEOUT, sidecar: Optional[str] = None,
                 env: Optional[dict] = None):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        child_env = dict(os.environ if env is None else env)
        if sidecar is not None:
            child_env[SIDECAR_ENV] = str(sidecar)
        self.timeout = timeout
        self.name = None
        try:
            self.proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, env=child_env)
        except OSError as exc:
            raise AdapterError(f"cannot launch adapter {argv!r}: {exc}") from None
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        try:
            self._send({"type": "hello", "version": PROTOCOL_VERSION})
            reply = self._expect("ready")
        except AdapterError:
            self.close()
            raise
        self.name = reply.get("name")

    def _pump(self):
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def alive(self) -> bool:
        return self.proc.poll() is None

    def _send(self, msg: dict, payload: bytes = b"") -> None:
        try:
            self.proc.stdin.write(json.dumps(msg).encode("utf-8") + b"\n" + payload)
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise AdapterError(f"adapter pipe closed: {exc}") from None

    def _expect(self, kind: str) -> dict:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise AdapterError(f"adapter timed out waiting for {kind!r}") from None
        if line is None:
            self._lines.put(None)
            raise AdapterError(f"adapter exited while waiting for {kind!r}")
        try:
            msg = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise AdapterError(f"adapter sent a malformed line: {line[:200]!r}") from None
        if not isinstance(msg, dict) or msg.get("type") != kind:
            raise AdapterError(f"expected {kind!r} from adapter, got {msg!r}")
        return msg

    def init(self, image: np.ndarray, box: Bbox) -> None:
        data = encode_png(image)
        h, w = image.shape[:2]
        self._send({"type": "init", "width": w, "height": h, "bbox": box_to_wire(box), "image_bytes": len(data)}, data)
        self._expect("ok")

    def track(self, image: np.ndarray) -> tuple[Bbox, float]:
        data = encode_png(image)
        h, w = image.shape[:2]
        self._send({"type": "track", "width": w, "height": h, "image_bytes": len(data)}, data)
        msg = self._expect("result")
        score = msg.get("score", 0.0)
        try:
            score = float(score)
        except (TypeError, ValueError):
            raise AdapterError(f"score must be a number, got {score!r}") from None
        return box_from_wire(msg.get("bbox")), score

    def close(self) -> None:
        if self.proc.poll() is None:
            try:
                self._send({"type": "bye"})
                self.proc.stdin.close()
            except AdapterError:
                pass
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def serve(tracker: LocalTracker, name: str, stdin: Optional[BinaryIO] = None,
          stdout: Optional[BinaryIO] = None) -> int:
    """Adapter-side loop: speak the protocol on stdin/stdout for ``tracker``.
    Returns the process exit code (nonzero on a protocol violation)."""
    inp = stdin or sys.stdin.buffer
    out = stdout or sys.stdout.buffer

    def emit(msg):
        out.write(json.dumps(msg).encode("utf-8") + b"\n")
        out.flush()

    def payload(msg) -> np.ndarray:
        n = int(msg["image_bytes"])
        data = inp.read(n)
        if len(data) != n:
            raise AdapterError("truncated image payload")
        return decode_png(data)

    hello = inp.readline()
    try:
        msg = json.loads(hello)
    except json.JSONDecodeError:
        return 2
    if not isinstance(msg, dict) or msg.get("type") != "hello" or msg.get("version") != PROTOCOL_VERSION:
        return 2
    emit({"type": "ready", "name": name})
    while True:
        line = inp.readline()
        if not line:
            return 0
        if not line.strip():
            continue
        try:
            msg = json.loads(line)
            kind = msg.get("type")
            if kind == "bye":
                return 0
            if kind == "init":
                tracker.init(payload(msg), box_from_wire(msg["bbox"]))
                emit({"type": "ok"})
            elif kind == "track":
                box, score = tracker.track(payload(msg))
                emit({"type": "result", "bbox": box_to_wire(box), "score": float(score)})
            else:
                return 2
        except (KeyError, ValueError, TypeError, AdapterError, json.JSONDecodeError) as exc:
            print(f"adapter protocol error: {exc}", file=sys.stderr)
            return 2
