import io
import json
import sys
import textwrap

import numpy as np
import pytest

from omnitrack.adapter import AdapterProcess, serve
from omnitrack.annotations import Bbox
from omnitrack.errors import AdapterError

ECHO = """
import sys
from omnitrack.adapter import serve

class Echo:
    def init(self, image, box):
        self.box = box
        self.shape = image.shape
    def track(self, image):
        assert image.shape == self.shape
        return self.box, 0.5

sys.exit(serve(Echo(), "echo"))
"""


def script(tmp_path, body, name="a.py"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(body))
    return [sys.executable, str(p)]


def test_handshake_and_roundtrip(tmp_path):
    img = np.zeros((20, 30, 3), np.uint8)
    box = Bbox(10.5, 8.25, 6, 4, 0.1)
    with AdapterProcess(script(tmp_path, ECHO), timeout=10) as ad:
        assert ad.name == "echo"
        ad.init(img, box)
        got, score = ad.track(img)
    assert score == 0.5
    assert np.allclose(got.as_tuple(), box.as_tuple())
    assert not ad.alive()


def test_timeout(tmp_path):
    cmd = script(tmp_path, """
        import sys, time
        sys.stdin.readline()
        print('{"type": "ready"}', flush=True)
        time.sleep(30)
    """)
    ad = AdapterProcess(cmd, timeout=0.5)
    try:
        with pytest.raises(AdapterError, match="timed out"):
            ad.track(np.zeros((4, 4, 3), np.uint8))
    finally:
        ad.proc.kill()
        ad.close()


def test_malformed_reply(tmp_path):
    cmd = script(tmp_path, """
        import sys
        sys.stdin.readline()
        print("hello there", flush=True)
    """)
    with pytest.raises(AdapterError, match="malformed"):
        AdapterProcess(cmd, timeout=10)


def test_crash(tmp_path):
    cmd = script(tmp_path, """
        import sys
        sys.stdin.readline()
        print('{"type": "ready"}', flush=True)
        sys.stdin.readline()
        sys.exit(1)
    """)
    with AdapterProcess(cmd, timeout=10) as ad:
        with pytest.raises(AdapterError, match="exited|pipe"):
            ad.track(np.zeros((4, 4, 3), np.uint8))


def test_missing_executable():
    with pytest.raises(AdapterError, match="cannot launch"):
        AdapterProcess(["/nonexistent/tracker"])


class Fixed:
    def init(self, image, box):
        pass

    def track(self, image):
        return Bbox(1, 1, 1, 1), 1.0


@pytest.mark.parametrize("stream", [
    b"not json\n",
    b'{"type": "hello", "version": 99}\n',
    b'{"type": "hello", "version": 1}\n{"type": "dance"}\n',
    b'{"type": "hello", "version": 1}\n{"type": "track", "image_bytes": 100}\nshort',
])
def test_serve_rejects_violations(stream):
    assert serve(Fixed(), "x", io.BytesIO(stream), io.BytesIO()) == 2


def test_serve_clean_exit():
    out = io.BytesIO()
    assert serve(Fixed(), "x", io.BytesIO(b'{"type": "hello", "version": 1}\n{"type": "bye"}\n'), out) == 0
    assert json.loads(out.getvalue().splitlines()[0]) == {"type": "ready", "name": "x"}
