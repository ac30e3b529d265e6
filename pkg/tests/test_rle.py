import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sylvangen.errors import FormatError
from sylvangen.rle import mask_to_rle, rle_area, rle_bbox, rle_decode


def masks(max_side=24):
    return st.tuples(st.integers(1, max_side), st.integers(1, max_side)).flatmap(
        lambda hw: arrays(np.uint8, hw, elements=st.integers(0, 1))
    )


def test_hand_examples():
    assert mask_to_rle(np.zeros((2, 2)), 2, 2)["counts"] == [4]
    assert mask_to_rle(np.ones((2, 2)), 2, 2)["counts"] == [0, 4]
    m = np.zeros((2, 2), dtype=np.uint8)
    m[0, 1] = 1
    assert mask_to_rle(m, 2, 2) == {"size": [2, 2], "counts": [2, 1, 1]}


def test_decode_hand_examples():
    assert not rle_decode({"size": [2, 2], "counts": [4]}, 2, 2).any()
    out = rle_decode({"size": [2, 2], "counts": [2, 1, 1]}, 2, 2)
    assert out.tolist() == [[0, 1], [0, 0]]


def test_decode_rejects_bad_sum():
    with pytest.raises(FormatError):
        rle_decode({"size": [2, 2], "counts": [2, 1]})
    with pytest.raises(FormatError):
        rle_decode({"size": [2, 2], "counts": [4]}, 3, 2)


def test_roundtrip_1000_random_masks():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        h, w = rng.integers(1, 40, 2)
        m = (rng.uniform(size=(h, w)) < rng.uniform()).astype(np.uint8)
        r = mask_to_rle(m, h, w)
        assert np.array_equal(rle_decode(r, h, w), m)


def _bbox_oracle(m):
    ys, xs = np.nonzero(m)
    if len(xs) == 0:
        return (0, 0, 0, 0)
    return (xs.min(), ys.min(), xs.max() - xs.min() + 1, ys.max() - ys.min() + 1)


@settings(max_examples=200, deadline=None)
@given(masks())
def test_rle_properties(m):
    h, w = m.shape
    r = mask_to_rle(m, h, w)
    assert sum(r["counts"]) == h * w
    assert all(c > 0 for c in r["counts"][1:])
    assert np.array_equal(rle_decode(r, h, w), m)
    assert rle_area(r) == int(m.sum())
    assert rle_bbox(r) == _bbox_oracle(m)
