import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from physdisc.core import ContractError
from physdisc.genmodel import (
    ComponentPrediction,
    LatentPosterior,
    LossWeights,
    PlateauSwitch,
    image_log_likelihood,
    kl_gaussian,
    kl_loss,
    kl_mask,
    total_loss,
)

W = LossWeights()


def _image(rng, shape=(6, 7)):
    return rng.uniform(size=shape + (3,))


def _background(img):
    ones = np.ones(img.shape[:2])
    return ComponentPrediction(ones, img, ones, is_background=True)


def test_perfect_background(rng):
    img = _image(rng)
    per = -0.5 * math.log(2 * math.pi * 0.07**2)
    assert per == pytest.approx(1.740, abs=1e-3)
    got = image_log_likelihood(img, [_background(img)], W)
    assert got / img.size == pytest.approx(per, abs=1e-9)


def test_zero_mask_component_is_inert(rng):
    img = _image(rng)
    zero = np.zeros(img.shape[:2])
    junk = ComponentPrediction(zero, rng.uniform(size=img.shape), rng.uniform(size=img.shape[:2]))
    a = image_log_likelihood(img, [_background(img)], W)
    b = image_log_likelihood(img, [_background(img), junk], W)
    assert a == pytest.approx(b, abs=1e-9)


def test_wider_sigma_lowers_perfect_fit(rng):
    img = _image(rng)
    a = image_log_likelihood(img, [_background(img)], W)
    b = image_log_likelihood(img, [_background(img)], LossWeights(sigma_b=0.11))
    assert b < a


def test_mixture_matches_direct_sum(rng):
    img = _image(rng, (3, 4))
    m = rng.uniform(size=(3, 4))
    mu_b, mu_o = rng.uniform(size=img.shape), rng.uniform(size=img.shape)
    d_b, d_o = rng.uniform(size=(3, 4)), rng.uniform(size=(3, 4))
    comps = [ComponentPrediction(1 - m, mu_b, d_b, True), ComponentPrediction(m, mu_o, d_o)]

    def density(x, mu, s):
        return math.exp(-0.5 * ((x - mu) / s) ** 2) / math.sqrt(2 * math.pi * s * s)

    total = 0.0
    for i in range(3):
        for j in range(4):
            pb = d_b[i, j] if 1 - m[i, j] > 0.5 else 1 - d_b[i, j]
            po = d_o[i, j] if m[i, j] > 0.5 else 1 - d_o[i, j]
            for c in range(3):
                total += math.log(
                    (1 - m[i, j]) * max(pb, 1e-6) * density(img[i, j, c], mu_b[i, j, c], 0.07)
                    + m[i, j] * max(po, 1e-6) * density(img[i, j, c], mu_o[i, j, c], 0.11)
                )
    assert image_log_likelihood(img, comps, W) == pytest.approx(total, rel=1e-10)


def test_image_likelihood_contracts(rng):
    img = _image(rng)
    ones = np.ones(img.shape[:2])
    with pytest.raises(ContractError):
        image_log_likelihood(img, [ComponentPrediction(ones, img, ones)], W)
    half = ComponentPrediction(ones * 0.5, img, ones, True)
    with pytest.raises(ContractError):
        image_log_likelihood(img, [half], W)


def test_kl_gaussian_cases():
    assert kl_gaussian(LatentPosterior(np.zeros(4), np.zeros(4))) == 0.0
    mu = np.array([0.5, -1.0, 2.0])
    assert kl_gaussian(LatentPosterior(mu, np.zeros(3))) == pytest.approx(0.5 * np.sum(mu**2), abs=1e-12)
    one = kl_gaussian(LatentPosterior([0.0], [1.0]))
    assert one == pytest.approx(0.5 * (math.e - 2.0), abs=1e-12)
    assert one == pytest.approx(0.359, abs=1e-3)


def test_kl_mask_cases():
    q = np.random.default_rng(0).uniform(size=(5, 5))
    assert kl_mask(q, q) == pytest.approx(0.0, abs=1e-12)
    assert kl_mask(np.ones((3, 3)), np.full((3, 3), 0.5)) == pytest.approx(math.log(2), abs=1e-12)


@given(arrays(np.float64, (4, 4), elements=st.floats(0, 1)), arrays(np.float64, (4, 4), elements=st.floats(0, 1)))
def test_kl_mask_nonnegative(q, p):
    assert kl_mask(q, p) >= -1e-12


def test_kl_loss_weights():
    post = LatentPosterior([1.0], [0.0])
    pair = (np.ones((2, 2)), np.full((2, 2), 0.5))
    w = LossWeights(beta=2.0, gamma=3.0)
    assert kl_loss([post], [pair], w) == pytest.approx(2 * 0.5 + 3 * kl_mask(*pair))


def test_phase_switch():
    assert total_loss(0, 1.0, 2.0, 100.0, W) == 3.0
    before = total_loss(W.phase_switch_step - 1, 1.0, 2.0, 100.0, W)
    after = total_loss(W.phase_switch_step, 1.0, 2.0, 100.0, W)
    assert after - before == 100.0
    with pytest.raises(ContractError):
        total_loss(-1, 0, 0, 0, W)


def test_plateau_switch():
    sw = PlateauSwitch(window=10, rel_tol=1e-3)
    fired = [sw.update(100.0 - i) for i in range(40)]
    assert not any(fired)
    fired = [sw.update(50.0) for _ in range(20)]
    assert fired[-1] and sw.switched
    assert sw.update(1e6)
