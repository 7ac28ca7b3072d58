import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from physdisc.core import Cuboid, ObjectTrack, TrackState
from physdisc.dynamics import (
    PERFECT_LOG_LIKELIHOOD,
    DynamicsParams,
    InsufficientHistoryError,
    mask_probability,
    physics_log_likelihood,
    predict,
    predict_all,
    predict_cuboid,
    wrap_angle,
)
from physdisc.geometry import project, render_all

P = DynamicsParams()
ZERO = (0.0, 0.0, 0.0)


def _state(f, t, s=(1, 1, 1), q=ZERO, shape=(8, 8)):
    return TrackState(f, Cuboid(t, s, q), np.zeros(shape))


def test_constant_velocity():
    hist = [_state(i, (i, 0, 0)) for i in range(3)]
    np.testing.assert_array_equal(predict_cuboid(hist, 3).translation, [3, 0, 0])


def test_mean_size():
    hist = [_state(0, ZERO, (1, 1, 1)), _state(1, ZERO, (1, 1, 3))]
    np.testing.assert_array_equal(predict_cuboid(hist, 2).size, [1, 1, 2])


def test_stationary_prediction(cam):
    c = Cuboid((0.5, 1.0, 15.0), (1, 1, 1), (0, 0.2, 0))
    m = project(c, cam)
    tr = ObjectTrack("a", [TrackState(f, c, m) for f in range(3)])
    pc, pm = predict(tr, [tr], cam, P)
    assert pc == c
    np.testing.assert_array_equal(pm, m)


def test_rotation_wraps():
    hist = [_state(0, ZERO, q=(0, 3.0, 0)), _state(1, ZERO, q=(0, -3.0, 0))]
    step = 2 * math.pi - 6.0
    got = predict_cuboid(hist, 2).rotation[1]
    assert got == pytest.approx(-3.0 + step)


@given(st.floats(-50, 50))
def test_wrap_range(a):
    w = float(wrap_angle(a))
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)


def test_insufficient_history(cam):
    tr = ObjectTrack("a", [_state(0, (0, 0, 10), shape=cam.image_size)])
    with pytest.raises(InsufficientHistoryError):
        predict(tr, [tr], cam, P)


def test_prediction_occluded_by_nearer_track(cam):
    far = ObjectTrack("far", [TrackState(f, Cuboid((0, 1, 20), (1, 1, 1), ZERO), np.zeros((128, 128))) for f in range(2)])
    near = ObjectTrack("near", [TrackState(f, Cuboid((0, 1, 12), (1.5, 1.5, 1), ZERO), np.zeros((128, 128))) for f in range(2)])
    pc, pm = predict(far, [far, near], cam, P)
    expected = render_all([pc, near.states[-1].cuboid], cam)[0]
    np.testing.assert_array_equal(pm, expected)
    assert pm.sum() < project(pc, cam).sum()


def test_stale_tracks_are_skipped(cam):
    tr = ObjectTrack("a", [_state(f, (0, 1, 15), shape=cam.image_size) for f in range(2)])
    assert "a" in predict_all([tr], cam, P, 4)
    assert predict_all([tr], cam, P, 5) == {}


def test_mask_probability_cases():
    ones = np.ones((4, 4))
    np.testing.assert_array_equal(mask_probability(ones, ones, P), 1.0)
    half = np.full((4, 4), 0.5)
    rnd = (np.random.default_rng(0).uniform(size=(4, 4)) > 0.5).astype(float)
    np.testing.assert_array_equal(mask_probability(half, rnd, P), 0.5)
    np.testing.assert_array_equal(mask_probability(np.zeros((4, 4)), ones, P), 0.0)


def test_perfect_likelihood():
    oracle = 9 * (-0.5 * math.log(2 * math.pi))
    assert oracle == pytest.approx(-8.270, abs=5e-4)
    c = Cuboid((1, 2, 3), (1, 1, 1), (0.1, 0.2, 0.3))
    m = np.zeros((6, 6)); m[2:4, 2:4] = 1
    assert physics_log_likelihood((c, m), (c, m), P) == pytest.approx(oracle, abs=1e-12)
    assert PERFECT_LOG_LIKELIHOOD == pytest.approx(oracle, abs=1e-12)


@pytest.mark.parametrize("axis", [0, 1, 2])
def test_one_sigma_costs_half(axis):
    c = Cuboid((1, 2, 3), (1, 1, 1), ZERO)
    off = np.zeros(3); off[axis] = P.sigma_t
    m = np.ones((3, 3))
    base = physics_log_likelihood((c, m), (c, m), P)
    moved = physics_log_likelihood((c, m), (c.moved(off), m), P)
    assert base - moved == pytest.approx(0.5, abs=1e-12)


def test_half_mask_term():
    c = Cuboid((1, 2, 3), (1, 1, 1), ZERO)
    val = physics_log_likelihood((c, np.full((5, 5), 0.5)), (c, np.ones((5, 5))), P)
    assert val - PERFECT_LOG_LIKELIHOOD == pytest.approx(math.log(0.5), abs=1e-12)


def test_floor_keeps_value_finite():
    c = Cuboid((1, 2, 3), (1, 1, 1), ZERO)
    val = physics_log_likelihood((c, np.zeros((4, 4))), (c, np.ones((4, 4))), P)
    assert val == pytest.approx(PERFECT_LOG_LIKELIHOOD + math.log(1e-6))


@given(st.floats(0.05, 5), st.floats(0.05, 5), st.floats(0.05, 5))
def test_likelihood_peaks_at_prediction(st_, ss, sq):
    params = DynamicsParams(sigma_t=st_, sigma_s=ss, sigma_q=sq)
    c = Cuboid((0, 0, 5), (1, 2, 1), ZERO)
    m = np.ones((2, 2))
    best = physics_log_likelihood((c, m), (c, m), params)
    assert physics_log_likelihood((c, m), (c.moved((0.1, 0, 0)), m), params) < best
