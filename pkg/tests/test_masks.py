import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gazelabel.errors import DimensionError, ValidationError
from gazelabel.kde import BinaryMask, GridSpec
from gazelabel.masks import BBox, connected_components, mask_iou, mask_to_bboxes, masks_miou

from oracles import flood_components, naive_iou


def mask(bits, ds=1):
    bits = np.asarray(bits, dtype=bool)
    return BinaryMask(GridSpec(ds, bits.shape[1], bits.shape[0]), bits)


def square(n, x0, y0, size, shape=(40, 40)):
    bits = np.zeros(shape, dtype=bool)
    bits[y0 : y0 + size, x0 : x0 + size] = True
    return mask(bits)


def test_components_empty_and_block():
    assert connected_components(mask(np.zeros((5, 5)))) == []
    m = square(0, 1, 1, 3, (6, 6))
    (comp,) = connected_components(m)
    assert len(comp) == 9


def test_diagonal_cells_are_connected():
    m = mask([[1, 0], [0, 1]])
    assert len(connected_components(m)) == 1


def test_components_ordering():
    bits = np.zeros((6, 10), dtype=bool)
    bits[0, 8] = True  # single cell, later index
    bits[4, 0] = True  # single cell
    bits[0:2, 0:2] = True  # 4 cells
    comps = connected_components(mask(bits))
    assert [len(c) for c in comps] == [4, 1, 1]
    assert int(comps[1][0]) == 8 and int(comps[2][0]) == 40


@settings(max_examples=50, deadline=None)
@given(arrays(bool, st.tuples(st.integers(1, 20), st.integers(1, 20))))
def test_components_partition_matches_flood_fill(bits):
    m = mask(bits)
    w = bits.shape[1]
    comps = connected_components(m)
    got = sorted(sorted(divmod(int(i), w) for i in c) for c in comps)
    ref = sorted(sorted(c) for c in flood_components(bits))
    assert got == ref
    assert sum(len(c) for c in comps) == int(bits.sum())


def test_single_cell_box_scaled_by_downsample():
    bits = np.zeros((4, 4), dtype=bool)
    bits[2, 1] = True
    (box,) = mask_to_bboxes(mask(bits, ds=16))
    assert box == BBox(16, 32, 32, 48)
    assert (box.width, box.height) == (16, 16)


def test_l_shaped_component_box():
    bits = np.zeros((4, 4), dtype=bool)
    bits[0, 0:3] = True
    bits[1, 0] = True
    assert mask_to_bboxes(mask(bits)) == [BBox(0, 0, 3, 2)]


def test_empty_mask_no_boxes():
    assert mask_to_bboxes(mask(np.zeros((3, 3)))) == []


def test_min_area_filter_counts_discards():
    bits = np.zeros((10, 10), dtype=bool)
    bits[0, 0] = True
    bits[5:8, 5:8] = True
    boxes, discarded = mask_to_bboxes(mask(bits), min_area_px=4, with_discarded=True)
    assert boxes == [BBox(5, 5, 8, 8)] and discarded == 1


def test_clip_to_slide():
    bits = np.ones((2, 2), dtype=bool)
    (box,) = mask_to_bboxes(mask(bits, ds=16), clip_to=(20, 30))
    assert box == BBox(0, 0, 20, 30)


@settings(max_examples=50, deadline=None)
@given(arrays(bool, st.tuples(st.integers(1, 16), st.integers(1, 16))))
def test_boxes_are_tight(bits):
    m = mask(bits)
    w = bits.shape[1]
    comps = connected_components(m)
    boxes = mask_to_bboxes(m, min_area_px=0)
    assert len(boxes) == len(comps)
    for comp, box in zip(comps, boxes):
        rows, cols = np.divmod(comp, w)
        assert box.x_min == cols.min() and box.x_max == cols.max() + 1
        assert box.y_min == rows.min() and box.y_max == rows.max() + 1


def test_iou_examples():
    a = square(0, 2, 2, 10)
    assert mask_iou(a, a) == 1.0
    assert mask_iou(a, square(0, 20, 20, 10)) == 0.0
    assert mask_iou(a, square(0, 7, 2, 10)) == pytest.approx(1 / 3, abs=1e-15)


def test_iou_empty_conventions():
    empty = mask(np.zeros((5, 5)))
    assert mask_iou(empty, empty) == 1.0
    assert mask_iou(empty, square(0, 0, 0, 2, (5, 5))) == 0.0


def test_iou_dimension_error():
    with pytest.raises(DimensionError):
        mask_iou(mask(np.zeros((3, 3))), mask(np.zeros((3, 4))))


pair_st = st.integers(1, 24).flatmap(
    lambda h: st.integers(1, 24).flatmap(
        lambda w: st.tuples(arrays(bool, (h, w)), arrays(bool, (h, w)))
    )
)


@settings(max_examples=100, deadline=None)
@given(pair_st)
def test_iou_matches_naive_and_is_symmetric(pair):
    a, b = mask(pair[0]), mask(pair[1])
    assert mask_iou(a, b) == naive_iou(pair[0], pair[1])
    assert mask_iou(a, b) == mask_iou(b, a)
    if pair[0].any() and pair[1].any():
        assert (mask_iou(a, b) == 1.0) == np.array_equal(pair[0], pair[1])


@settings(max_examples=50, deadline=None)
@given(pair_st, st.integers(0, 6), st.integers(0, 6))
def test_iou_translation_invariant(pair, dx, dy):
    h, w = pair[0].shape
    big = [np.zeros((h + 6, w + 6), dtype=bool) for _ in range(2)]
    for dst, src in zip(big, pair):
        dst[dy : dy + h, dx : dx + w] = src
    assert mask_iou(mask(big[0]), mask(big[1])) == mask_iou(mask(pair[0]), mask(pair[1]))


def test_miou_identical_pairs():
    a = square(0, 1, 1, 5)
    s = masks_miou([(a, a), (a, a)])
    assert (s.mean, s.std_dev, s.count) == (1.0, 0.0, 2)


def test_miou_population_statistics():
    # IOUs 0.2, 0.4, 0.6 from 10-cell hand masks
    def pair(k):
        hand = np.zeros((1, 10), dtype=bool)
        hand[0, :] = True
        gaze = np.zeros((1, 10), dtype=bool)
        gaze[0, :k] = True
        return mask(hand), mask(gaze)

    s = masks_miou([pair(2), pair(4), pair(6)])
    assert s.mean == pytest.approx(0.4, abs=1e-15)
    assert s.std_dev == pytest.approx(np.sqrt(0.08 / 3), abs=1e-15)
    assert s.std_dev == pytest.approx(0.1633, abs=1e-4)


def test_miou_empty_list_error():
    with pytest.raises(ValidationError):
        masks_miou([])


def test_bbox_validation_and_ops():
    with pytest.raises(ValidationError):
        BBox(0, 0, 0, 5)
    b = BBox(0, 0, 10, 10)
    assert b.intersection(BBox(10, 0, 20, 10)) is None
    assert b.intersection(BBox(5, 5, 20, 20)) == BBox(5, 5, 10, 10)
    assert b.shifted(3, 4) == BBox(3, 4, 13, 14)
