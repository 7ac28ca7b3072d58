"""Image mixture likelihood, KL terms and the two-phase loss schedule.

Pure functions only; nothing here learns.  Probabilities are combined in
log space and each probability-valued term is clamped at ``EPS`` before
taking its log.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp, rel_entr

from .core import ContractError, as_mask, check_same_size

EPS = 1e-6


@dataclass(frozen=True)
class LossWeights:
    beta: float = 0.5
    gamma: float = 0.5
    sigma: float = 0.11
    sigma_b: float = 0.07
    phase_switch_step: int = 100_000

    def __post_init__(self):
        if min(self.beta, self.gamma, self.sigma, self.sigma_b) <= 0 or self.phase_switch_step <= 0:
            raise ContractError("loss weights must all be positive")


@dataclass
class ComponentPrediction:
    """One mixture component: its mask, mean image and decoded mask."""

    mask: np.ndarray
    mean_image: np.ndarray
    decoded_mask: np.ndarray
    is_background: bool = False

    def __post_init__(self):
        self.mask = as_mask(self.mask)
        self.decoded_mask = as_mask(self.decoded_mask, "decoded_mask")
        self.mean_image = np.asarray(self.mean_image, dtype=np.float64)
        if self.mean_image.shape != self.mask.shape + (3,):
            raise ContractError(f"mean image shape {self.mean_image.shape} does not match mask")
        if not np.all(np.isfinite(self.mean_image)):
            raise ContractError("mean image must be finite")
        check_same_size(self.mask, self.decoded_mask)


@dataclass(frozen=True)
class LatentPosterior:
    mean: np.ndarray
    log_variance: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        lv = np.asarray(self.log_variance, dtype=np.float64).reshape(-1)
        if mu.shape != lv.shape:
            raise ContractError("posterior mean and log-variance lengths differ")
        if not np.all(np.isfinite(lv)) or not np.all(np.isfinite(mu)):
            raise ContractError("posterior parameters must be finite")
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "log_variance", lv)


def decoded_match_probability(mask: np.ndarray, decoded: np.ndarray) -> np.ndarray:
    """Probability that the decoded mask agrees with the mixture mask, per pixel."""
    hit = mask > 0.5
    return np.where(hit, decoded, 1.0 - decoded)


def image_log_likelihood(
    image,
    components: Sequence[ComponentPrediction],
    w: LossWeights = LossWeights(),
    partition_tol: float = 1e-4,
) -> float:
    """Log-likelihood of the image under the spatial Gaussian mixture.

    Summed over pixels and RGB channels.  Objects use ``w.sigma`` and the
    single background component uses ``w.sigma_b``.  The image loss is the
    negation of this value.
    """
    img = np.asarray(getattr(image, "image", image), dtype=np.float64)
    n_bg = sum(c.is_background for c in components)
    if n_bg != 1:
        raise ContractError(f"exactly one background component required, got {n_bg}")
    shape = img.shape[:2]
    total = np.zeros(shape)
    for c in components:
        if c.mask.shape != shape:
            raise ContractError(f"component mask shape {c.mask.shape} != image {shape}")
        total += c.mask
    err = float(np.max(np.abs(total - 1.0)))
    if err > partition_tol:
        raise ContractError(f"component masks violate partition of unity (max error {err:.3g})")

    terms = []
    for c in components:
        sigma = w.sigma_b if c.is_background else w.sigma
        with np.errstate(divide="ignore"):
            log_m = np.log(c.mask)
        log_d = np.log(np.maximum(decoded_match_probability(c.mask, c.decoded_mask), EPS))
        log_n = -0.5 * math.log(2.0 * math.pi * sigma**2) - 0.5 * ((img - c.mean_image) / sigma) ** 2
        terms.append(log_m[..., None] + log_d[..., None] + log_n)
    return float(np.sum(logsumexp(np.stack(terms), axis=0)))


def image_loss(image, components, w: LossWeights = LossWeights()) -> float:
    return -image_log_likelihood(image, components, w)


def kl_gaussian(post: LatentPosterior) -> float:
    """KL from a diagonal Gaussian posterior to the standard normal prior."""
    lv = post.log_variance
    return float(0.5 * np.sum(np.exp(lv) + post.mean**2 - 1.0 - lv))


def kl_mask(attention_mask, decoded_mask, eps: float = EPS) -> float:
    """Mean per-pixel Bernoulli KL(attention || decoded).

    The decoded probabilities are clamped to ``[eps, 1 - eps]``; terms with
    zero attention weight vanish (0 log 0 = 0).
    """
    q, p = as_mask(attention_mask), as_mask(decoded_mask, "decoded_mask")
    check_same_size(q, p)
    p = np.clip(p, eps, 1.0 - eps)
    kl = rel_entr(q, p) + rel_entr(1.0 - q, 1.0 - p)
    return float(np.mean(kl))


def kl_loss(
    posteriors: Sequence[LatentPosterior],
    mask_pairs: Sequence[tuple[np.ndarray, np.ndarray]],
    w: LossWeights = LossWeights(),
) -> float:
    """beta * sum of latent KLs + gamma * sum of mask KLs (background included)."""
    return w.beta * sum(kl_gaussian(p) for p in posteriors) + w.gamma * sum(
        kl_mask(q, d) for q, d in mask_pairs
    )


def physics_loss(log_likelihoods: Sequence[float]) -> float:
    return -float(np.sum(log_likelihoods))


def total_loss(step: int, l_image: float, l_kl: float, l_physics: float, w: LossWeights = LossWeights()) -> float:
    """Image + KL losses, plus the physics loss from ``phase_switch_step`` on."""
    if step < 0:
        raise ContractError(f"step must be >= 0, got {step}")
    loss = l_image + l_kl
    if step >= w.phase_switch_step:
        loss += l_physics
    return loss


class PlateauSwitch:
    """Alternative phase trigger: fires once the image loss stops improving.

    Compares the mean of the latest ``window`` losses with the mean of the
    window before it; a relative change below ``rel_tol`` latches the
    switch on.
    """

    def __init__(self, window: int = 1000, rel_tol: float = 1e-3):
        self.window = window
        self.rel_tol = rel_tol
        self._buf: deque[float] = deque(maxlen=2 * window)
        self.switched = False

    def update(self, loss: float) -> bool:
        self._buf.append(float(loss))
        if not self.switched and len(self._buf) == 2 * self.window:
            vals = list(self._buf)
            prev = np.mean(vals[: self.window])
            cur = np.mean(vals[self.window:])
            if abs(cur - prev) <= self.rel_tol * max(abs(prev), 1e-12):
                self.switched = True
        return self.switched
