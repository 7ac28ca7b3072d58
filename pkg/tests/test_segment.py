import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from physdisc.core import ContractError
from physdisc.evalkit import iou2d
from physdisc.segment import Segmenter, classical_segment, decompose, from_hard_masks, kmeans_colors

IMG = np.zeros((8, 8, 3))


def constant(value):
    return Segmenter(lambda img, ctx: np.full(ctx.shape, value), slots=3)


@pytest.mark.parametrize(
    "value, expected",
    [(1.0, [1.0, 0.0, 0.0]), (0.0, [0.0, 0.0, 1.0]), (0.5, [0.5, 0.25, 0.25])],
)
def test_constant_attention(value, expected):
    dec = decompose(IMG, constant(value))
    assert len(dec.masks) == 3
    for m, e in zip(dec.masks, expected):
        np.testing.assert_allclose(m, e, atol=0)


@given(st.integers(2, 7), arrays(np.float64, (6, 6, 6), elements=st.floats(0, 1)))
def test_partition_and_context_bound(k, attn):
    maps = iter(attn)
    dec = decompose(IMG[:6, :6], Segmenter(lambda img, ctx: next(maps), slots=k))
    np.testing.assert_allclose(np.sum(dec.masks, axis=0), 1.0, atol=1e-12)
    for i, m in enumerate(dec.masks):
        assert np.all(m <= dec.contexts[i] + 1e-15)


def test_attention_outside_unit_interval():
    with pytest.raises(ContractError):
        decompose(IMG, constant(1.5))
    with pytest.raises(ContractError):
        decompose(IMG, Segmenter(lambda img, ctx: np.full(ctx.shape, np.nan), 3))
    with pytest.raises(ContractError):
        decompose(IMG, Segmenter(lambda img, ctx: np.zeros((2, 2)), 3))
    with pytest.raises(ContractError):
        decompose(IMG, Segmenter(lambda img, ctx: ctx, 1))


def _canvas(h=64, w=64):
    return np.ones((h, w, 3))


def test_single_square():
    img = _canvas()
    truth = np.zeros((64, 64))
    truth[20:40, 10:30] = 1
    img[truth > 0] = (1.0, 0.0, 0.0)
    dec = classical_segment(img, 3)
    assert iou2d(dec.background, 1 - truth) >= 0.95
    assert iou2d(dec.masks[1], truth) >= 0.95
    assert not dec.masks[2].any()


def test_two_squares():
    img = _canvas()
    a = np.zeros((64, 64)); a[5:20, 5:20] = 1
    b = np.zeros((64, 64)); b[40:60, 30:50] = 1
    img[a > 0] = (0.0, 0.0, 1.0)
    img[b > 0] = (0.0, 0.8, 0.0)
    dec = classical_segment(img, 3)
    found = sorted(dec.objects, key=lambda m: m.sum())
    assert iou2d(found[0], a) >= 0.95
    assert iou2d(found[1], b) >= 0.95


def test_uniform_image():
    dec = classical_segment(np.full((16, 16, 3), 0.3), 2)
    np.testing.assert_array_equal(dec.background, 1.0)
    np.testing.assert_array_equal(dec.masks[1], 0.0)


def test_same_color_blobs_are_separate():
    img = _canvas(32, 32)
    img[2:8, 2:8] = (0.2, 0.2, 0.9)
    img[20:28, 20:28] = (0.2, 0.2, 0.9)
    dec = classical_segment(img, 4)
    assert sum(m.any() for m in dec.objects) == 2


def test_receptive_field_tiles_wide_object():
    img = _canvas(32, 96)
    img[10:20, 4:90] = (0.9, 0.1, 0.1)
    whole = classical_segment(img, 5)
    tiled = classical_segment(img, 5, receptive_field=40)
    assert sum(m.any() for m in whole.objects) == 1
    pieces = [m for m in tiled.objects if m.any()]
    assert len(pieces) == 3
    np.testing.assert_array_equal(np.sum(pieces, axis=0), whole.objects[0])


def test_background_hint():
    img = np.full((20, 20, 3), 0.5)
    img[:10] = (0.1, 0.1, 0.1)
    dec = classical_segment(img, 3, background_color=(0.5, 0.5, 0.5))
    assert dec.background[15].all() and not dec.background[5].any()


def test_kmeans_deterministic():
    colors = np.random.default_rng(0).uniform(size=(40, 3))
    w = np.ones(40)
    l1, c1 = kmeans_colors(colors, w, 4)
    l2, c2 = kmeans_colors(colors, w, 4)
    np.testing.assert_array_equal(l1, l2)
    np.testing.assert_array_equal(c1, c2)


def test_from_hard_masks_pads():
    bg = np.ones((4, 4)); bg[0, 0] = 0
    obj = np.zeros((4, 4)); obj[0, 0] = 1
    dec = from_hard_masks(bg, [obj], 4)
    assert len(dec.masks) == 4
    dec.check()
