import math

import numpy as np
import pytest

from omnitrack.annotations import Bbox, Bfov
from omnitrack.dataset import (SequenceLayout, decode_png, encode_png, read_attributes, read_boxes,
                               read_fovs, write_boxes, write_fovs, write_meta)
from omnitrack.errors import ValidationError
from omnitrack.sphere import ErpDims


def test_box_roundtrip_six_decimals(tmp_path, rng):
    boxes = [Bbox(*rng.uniform(1, 500, 4), math.radians(rng.uniform(-45, 45))) for _ in range(50)]
    boxes[7] = None
    write_boxes(tmp_path / "b.txt", boxes)
    back = read_boxes(tmp_path / "b.txt")
    assert back[7] is None
    for a, b in zip(boxes, back):
        if a is None:
            continue
        assert np.allclose(a.as_tuple()[:4], b.as_tuple()[:4], atol=5e-7)
        assert math.degrees(a.gamma) == pytest.approx(math.degrees(b.gamma), abs=5e-7)


def test_fov_roundtrip(tmp_path):
    fovs = [Bfov.from_degrees(-179.5, 33.25, 40, 20, 12.5), None, Bfov.from_degrees(0, -89, 360, 2)]
    write_fovs(tmp_path / "f.txt", fovs)
    back = read_fovs(tmp_path / "f.txt")
    assert back[1] is None
    assert back[0].degrees() == pytest.approx(fovs[0].degrees(), abs=1e-6)
    assert back[2].degrees() == pytest.approx(fovs[2].degrees(), abs=1e-6)


def test_comments_blank_lines_and_four_columns(tmp_path):
    p = tmp_path / "b.txt"
    p.write_text("# header\n\n10,20,30,40   # trailing\nNONE\n")
    b, n = read_boxes(p)
    assert n is None and b.as_tuple() == (10, 20, 30, 40, 0)


@pytest.mark.parametrize("text", ["1,2,3\n", "1,2,x,4\n", "1,2,nan,4\n", "1,2,0,4\n"])
def test_bad_rows(tmp_path, text):
    p = tmp_path / "b.txt"
    p.write_text(text)
    with pytest.raises(ValidationError, match="b.txt:1"):
        read_boxes(p)


def test_line_count_mismatch(tmp_path):
    write_meta(tmp_path, ErpDims(64, 32), 3, "x")
    write_boxes(tmp_path / "bbox.txt", [Bbox(1, 1, 1, 1)] * 2)
    seq = SequenceLayout.open(tmp_path)
    with pytest.raises(ValidationError, match="2 lines for 3 frames"):
        seq.frame_annotations()


def test_missing_meta(tmp_path):
    with pytest.raises(ValidationError, match="meta.txt"):
        SequenceLayout.open(tmp_path)


def test_attributes_values(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("CB=1\nHL=0\n")
    assert read_attributes(p) == {"CB": True, "HL": False}
    p.write_text("CB=yes\n")
    with pytest.raises(ValidationError):
        read_attributes(p)


def test_png_roundtrip(rng):
    img = rng.integers(0, 256, (17, 33, 3), dtype=np.uint8)
    assert np.array_equal(decode_png(encode_png(img)), img)


def test_generated_sequence_layout(equator_seq):
    seq = SequenceLayout.open(equator_seq)
    annos = seq.frame_annotations()
    assert seq.dims == ErpDims(512, 256) and len(annos) == seq.n_frames == 12
    assert all(a.bbox and a.rbbox and a.bfov and a.rbfov for a in annos)
    assert seq.read_frame(0).shape == (256, 512, 3)
