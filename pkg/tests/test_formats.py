import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gazelabel import formats
from gazelabel.detection import Detection, evaluate
from gazelabel.errors import FormatError, ParseError
from gazelabel.kde import BinaryMask, GridSpec
from gazelabel.masks import BBox


def test_label_line_normalisation():
    line = formats.format_label_line(BBox(100, 200, 300, 400), 4000, 4000)
    assert line == "0 0.050000 0.075000 0.050000 0.050000"


def test_empty_label_file(tmp_path):
    p = formats.write_labels(tmp_path / "x.txt", [], 4000, 4000)
    assert p.read_bytes() == b""
    assert formats.read_labels(p, 4000, 4000) == []


boxes_st = st.lists(
    st.tuples(st.integers(0, 39000), st.integers(0, 39000), st.integers(1, 1000), st.integers(1, 1000)).map(
        lambda t: BBox(t[0], t[1], t[0] + t[2], t[1] + t[3])
    ),
    max_size=20,
)


@settings(max_examples=50, deadline=None)
@given(boxes_st)
def test_label_round_trip(boxes):
    text = formats.labels_to_text(boxes, 40000, 40000)
    assert formats.parse_labels(text, 40000, 40000) == boxes


def test_detection_round_trip_with_confidence():
    dets = [Detection("img", BBox(10, 20, 110, 220), 0.875)]
    text = formats.labels_to_text(dets, 4000, 4000)
    assert text.strip().split()[-1] == "0.875000"
    assert formats.parse_labels(text, 4000, 4000, "img") == dets


def test_bad_label_line():
    with pytest.raises(ParseError, match="line 2"):
        formats.parse_labels("0 0.5 0.5 0.1 0.1\n0 0.5\n", 100, 100)


@settings(max_examples=40, deadline=None)
@given(arrays(bool, st.tuples(st.integers(1, 30), st.integers(1, 30))), st.integers(1, 32))
def test_pgm_and_rle_round_trip(bits, ds):
    spec = GridSpec(ds, bits.shape[1], bits.shape[0])
    m = BinaryMask(spec, bits)
    assert formats.mask_from_pgm(formats.mask_to_pgm(m), spec) == m
    rle = json.loads(json.dumps(formats.mask_to_rle(m)))
    assert formats.mask_from_rle(rle, ds) == m


def test_pgm_layout(tmp_path):
    bits = np.array([[1, 0, 0], [0, 0, 1]], dtype=bool)
    m = BinaryMask(GridSpec(16, 3, 2), bits)
    p = formats.write_mask(tmp_path / "m.pgm", m, (40, 30))
    assert p.read_bytes() == b"P5\n3 2\n255\n\xff\x00\x00\x00\x00\xff"
    back, meta = formats.read_mask(p)
    assert back == m
    assert meta == {"downsample": 16, "width_cells": 3, "height_cells": 2, "slide_width": 40, "slide_height": 30}


def test_rle_example():
    bits = np.array([[1, 1, 0], [0, 1, 1]], dtype=bool)
    rle = formats.mask_to_rle(BinaryMask(GridSpec(1, 3, 2), bits))
    assert rle == {"dims": [3, 2], "runs": [[0, 2], [4, 2]]}


def test_pgm_errors():
    spec = GridSpec(1, 2, 2)
    with pytest.raises(FormatError):
        formats.mask_from_pgm(b"P2\n2 2\n255\n0000", spec)
    with pytest.raises(FormatError):
        formats.mask_from_pgm(b"P5\n2 2\n255\n\x00", spec)
    with pytest.raises(FormatError):
        formats.mask_from_pgm(b"P5\n3 2\n255\n\x00\x00\x00\x00\x00\x00", spec)


def test_eval_outputs():
    gt = {"a": [BBox(0, 0, 10, 10)]}
    r = evaluate([Detection("a", BBox(0, 0, 10, 10), 0.9), Detection("a", BBox(50, 50, 60, 60), 0.4)], gt, 1, 0.5)
    table = formats.eval_table_csv([r]).splitlines()
    assert table[0] == "ot,ap,lamr,tp,fp,gt"
    assert table[1].startswith("0.50,1.0,")
    curve = formats.curve_csv(r).splitlines()
    assert curve[0] == "confidence,precision,recall,fppi,miss_rate"
    assert curve[1:] == ["0.9,1.0,1.0,0.0,0.0", "0.4,0.5,1.0,1.0,0.0"]
    (summary,) = formats.eval_summary([r])
    assert summary["map"] == summary["ap"] == 1.0
