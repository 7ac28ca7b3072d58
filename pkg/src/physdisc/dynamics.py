"""First-order motion prediction and the physics likelihood of an observation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Camera, ContractError, Cuboid, ObjectTrack, TrackState, as_mask, check_same_size
from .geometry import BehindCameraError, camera_distance, project

LOG_2PI = math.log(2.0 * math.pi)


class InsufficientHistoryError(ContractError):
    pass


class NumericError(ContractError):
    pass


@dataclass(frozen=True)
class DynamicsParams:
    sigma_t: float = 1.0
    sigma_s: float = 1.0
    sigma_q: float = 1.0
    history_window: int = 3
    mask_bin_threshold: float = 0.5
    log_floor: float = 1e-6

    def __post_init__(self):
        if min(self.sigma_t, self.sigma_s, self.sigma_q) <= 0:
            raise ContractError("all sigmas must be positive")
        if self.history_window < 2:
            raise ContractError("history_window must be >= 2")
        if not 0.0 < self.mask_bin_threshold < 1.0:
            raise ContractError("mask_bin_threshold must lie in (0, 1)")
        if not 0.0 < self.log_floor < 1.0:
            raise ContractError("log_floor must lie in (0, 1)")


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    a = np.asarray(a, dtype=np.float64)
    return np.pi - np.mod(np.pi - a, 2.0 * np.pi)


def predict_cuboid(history: Sequence[TrackState], frame: int) -> Cuboid:
    """Constant-velocity extrapolation of ``history`` to ``frame``.

    Velocities are the mean per-frame differences over the history;
    sizes are averaged.  Rotation steps are wrapped before averaging.
    """
    if len(history) < 2:
        raise InsufficientHistoryError(f"need >= 2 states, got {len(history)}")
    frames = np.array([s.frame for s in history], dtype=np.float64)
    t = np.stack([s.cuboid.translation for s in history])
    q = np.stack([s.cuboid.rotation for s in history])
    gaps = np.diff(frames)[:, None]
    v_t = np.mean(np.diff(t, axis=0) / gaps, axis=0)
    v_q = np.mean(wrap_angle(np.diff(q, axis=0)) / gaps, axis=0)
    ahead = frame - frames[-1]
    size = np.mean([s.cuboid.size for s in history], axis=0)
    return Cuboid(t[-1] + v_t * ahead, size, q[-1] + v_q * ahead)


def _safe_project(c: Cuboid, cam: Camera) -> np.ndarray:
    try:
        return project(c, cam)
    except BehindCameraError:
        return np.zeros(cam.image_size)


def predict_all(
    tracks: Sequence[ObjectTrack],
    cam: Camera,
    params: DynamicsParams,
    frame: int,
) -> dict[str, tuple[Cuboid, np.ndarray]]:
    """Predicted cuboid and occlusion-aware mask for every live track.

    A track is live at ``frame`` when it has a state within the history
    window before it.  Tracks with a single state are rendered in place
    (zero velocity) so they still occlude others, but are reported only
    if they have enough history to be predicted.
    """
    cuboids: list[Cuboid] = []
    ids: list[str | None] = []
    for tr in tracks:
        hist = tr.history_before(frame, params.history_window)
        if not hist or frame - hist[-1].frame > params.history_window:
            continue
        if len(hist) >= 2:
            cuboids.append(predict_cuboid(hist, frame))
            ids.append(tr.id)
        else:
            cuboids.append(hist[-1].cuboid)
            ids.append(None)
    order = sorted(range(len(cuboids)), key=lambda i: camera_distance(cuboids[i], cam))
    palette = np.ones(cam.image_size)
    out: dict[str, tuple[Cuboid, np.ndarray]] = {}
    for i in order:
        proj = _safe_project(cuboids[i], cam)
        if ids[i] is not None:
            out[ids[i]] = (cuboids[i], palette * proj)
        palette = palette * (1.0 - proj)
    return out


def predict(
    track: ObjectTrack,
    all_tracks: Sequence[ObjectTrack],
    cam: Camera,
    params: DynamicsParams,
    frame: int | None = None,
) -> tuple[Cuboid, np.ndarray]:
    """Next state of ``track``; its mask is rendered among all other tracks."""
    if frame is None:
        if not track.states:
            raise InsufficientHistoryError(f"track {track.id} is empty")
        frame = track.last_frame + 1
    hist = track.history_before(frame, params.history_window)
    if len(hist) < 2:
        raise InsufficientHistoryError(
            f"track {track.id} has {len(hist)} state(s) before frame {frame}, need 2"
        )
    others = [t for t in all_tracks if t.id != track.id]
    return predict_all([track, *others], cam, params, frame)[track.id]


def mask_probability(predicted, observed, params: DynamicsParams = DynamicsParams()) -> np.ndarray:
    """Per-pixel probability of the observed mask under the predicted one."""
    predicted, observed = as_mask(predicted, "predicted"), as_mask(observed, "observed")
    check_same_size(predicted, observed)
    hit = observed > params.mask_bin_threshold
    return np.where(hit, predicted, 1.0 - predicted)


def gaussian_log_density(x, mean, sigma: float) -> float:
    d = np.asarray(x, dtype=np.float64) - np.asarray(mean, dtype=np.float64)
    return float(np.sum(-0.5 * LOG_2PI - math.log(sigma) - 0.5 * (d / sigma) ** 2))


def state_log_likelihood(predicted: Cuboid, observed: Cuboid, params: DynamicsParams) -> float:
    """Sum of the nine Gaussian log-densities (translation, size, rotation)."""
    dq = wrap_angle(observed.rotation - predicted.rotation)
    return (
        gaussian_log_density(observed.translation, predicted.translation, params.sigma_t)
        + gaussian_log_density(observed.size, predicted.size, params.sigma_s)
        + gaussian_log_density(dq, 0.0, params.sigma_q)
    )


def mask_log_term(predicted, observed, params: DynamicsParams) -> float:
    """Mean over pixels of the floored log mask probability."""
    p = mask_probability(predicted, observed, params)
    return float(np.mean(np.log(np.maximum(p, params.log_floor))))


def physics_log_likelihood(
    predicted: tuple[Cuboid, np.ndarray],
    observed: tuple[Cuboid, np.ndarray],
    params: DynamicsParams = DynamicsParams(),
) -> float:
    """Log-likelihood of an observed (cuboid, mask) given its prediction."""
    (pc, pm), (oc, om) = predicted, observed
    for arr in (pc.translation, pc.size, pc.rotation, oc.translation, oc.size, oc.rotation):
        if not np.all(np.isfinite(arr)):
            raise NumericError("non-finite cuboid parameters")
    pm, om = as_mask(pm, "predicted"), as_mask(om, "observed")
    if not (np.all(np.isfinite(pm)) and np.all(np.isfinite(om))):
        raise NumericError("non-finite mask values")
    value = state_log_likelihood(pc, oc, params) + mask_log_term(pm, om, params)
    if not math.isfinite(value):
        raise NumericError("physics log-likelihood is not finite")
    return value


PERFECT_LOG_LIKELIHOOD = -4.5 * LOG_2PI
