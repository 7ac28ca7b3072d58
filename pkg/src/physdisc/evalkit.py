"""Segmentation and 3D metrics, surprise curves and relative accuracy."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Camera, ContractError, Cuboid, ObjectTrack, as_mask, check_same_size, euler_to_matrix
from .dynamics import DynamicsParams, physics_log_likelihood, predict_all

DETECTION_IOU = 0.5
RECALL_IOU_3D = 0.1


class EmptyReportError(ContractError):
    pass


class DegenerateFitError(ContractError):
    pass


# ---------------------------------------------------------------------------
# 2D


def iou2d(a, b) -> float:
    """IoU of two masks binarized at 0.5; zero when both are empty."""
    a, b = as_mask(a, "a") > 0.5, as_mask(b, "b") > 0.5
    check_same_size(a, b)
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return np.count_nonzero(a & b) / union


def iou_matrix(pred: Sequence[np.ndarray], gt: Sequence[np.ndarray]) -> np.ndarray:
    """Pairwise IoU, shape ``(len(gt), len(pred))``."""
    if not gt or not pred:
        return np.zeros((len(gt), len(pred)))
    G = np.stack([as_mask(g) > 0.5 for g in gt]).reshape(len(gt), -1).astype(np.float64)
    P = np.stack([as_mask(p) > 0.5 for p in pred]).reshape(len(pred), -1).astype(np.float64)
    if G.shape[1] != P.shape[1]:
        raise ContractError("prediction and ground-truth masks differ in size")
    inter = G @ P.T
    union = G.sum(1)[:, None] + P.sum(1)[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(union > 0, inter / union, 0.0)
    return out


@dataclass
class MatchReport:
    best_iou: list[float]
    mean_iou: float
    detection_rate: float
    per_frame: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "mean_iou": self.mean_iou,
            "detection_rate": self.detection_rate,
            "n_objects": len(self.best_iou),
            "per_frame": self.per_frame,
        }


def match_and_score(
    pred: Sequence[np.ndarray],
    gt: Sequence[np.ndarray],
    mode: str = "best",
    threshold: float = DETECTION_IOU,
) -> MatchReport:
    """Score predictions against ground-truth masks.

    ``mode="best"`` takes each ground-truth mask's maximum IoU over all
    predictions (predictions may be reused); ``mode="hungarian"`` uses a
    one-to-one assignment maximizing total IoU instead.
    """
    if not gt:
        raise EmptyReportError("no ground-truth masks to score")
    shape = as_mask(gt[0]).shape
    for m in list(gt) + list(pred):
        if as_mask(m).shape != shape:
            raise ContractError("all masks must share one size")
    M = iou_matrix(pred, gt)
    if not pred:
        best = np.zeros(len(gt))
    elif mode == "best":
        best = M.max(axis=1)
    elif mode == "hungarian":
        rows, cols = linear_sum_assignment(-M)
        best = np.zeros(len(gt))
        best[rows] = M[rows, cols]
    else:
        raise ContractError(f"unknown matching mode {mode!r}")
    best_list = [float(v) for v in best]
    return MatchReport(
        best_list,
        float(np.mean(best)),
        float(np.mean(best > threshold)),
    )


def pool_reports(reports: Sequence[MatchReport], threshold: float = DETECTION_IOU) -> MatchReport:
    """Aggregate per-frame reports over all ground-truth objects."""
    best = [v for r in reports for v in r.best_iou]
    if not best:
        raise EmptyReportError("no ground-truth objects in any report")
    arr = np.asarray(best)
    per_frame = [
        {"mean_iou": r.mean_iou, "detection_rate": r.detection_rate, "n_objects": len(r.best_iou)}
        for r in reports
    ]
    return MatchReport(best, float(arr.mean()), float(np.mean(arr > threshold)), per_frame)


# ---------------------------------------------------------------------------
# 3D


def _aabb(c: Cuboid) -> tuple[np.ndarray, np.ndarray]:
    return c.translation - c.size / 2.0, c.translation + c.size / 2.0


def _inside(points: np.ndarray, c: Cuboid) -> np.ndarray:
    local = (points - c.translation) @ euler_to_matrix(c.rotation)
    return np.all(np.abs(local) <= c.size / 2.0, axis=1)


def iou3d(a: Cuboid, b: Cuboid, samples: int = 100_000, seed: int = 0) -> float:
    """Volume IoU; exact for unrotated boxes, Monte Carlo otherwise."""
    if a.is_axis_aligned and b.is_axis_aligned:
        lo_a, hi_a = _aabb(a)
        lo_b, hi_b = _aabb(b)
        overlap = np.clip(np.minimum(hi_a, hi_b) - np.maximum(lo_a, lo_b), 0.0, None)
        inter = float(np.prod(overlap))
        union = float(np.prod(a.size) + np.prod(b.size) - inter)
        return inter / union
    return iou3d_monte_carlo(a, b, samples, seed)


def iou3d_monte_carlo(a: Cuboid, b: Cuboid, samples: int = 100_000, seed: int = 0) -> float:
    corners = np.vstack([a.corners(), b.corners()])
    lo, hi = corners.min(axis=0), corners.max(axis=0)
    pts = np.random.default_rng(seed).uniform(lo, hi, size=(samples, 3))
    ia, ib = _inside(pts, a), _inside(pts, b)
    union = np.count_nonzero(ia | ib)
    if union == 0:
        return 0.0
    return np.count_nonzero(ia & ib) / union


def recall3d(pred: Sequence[Cuboid], gt: Sequence[Cuboid], threshold: float = RECALL_IOU_3D) -> float:
    """Fraction of ground-truth boxes whose best 3D IoU exceeds ``threshold``."""
    if not gt:
        raise EmptyReportError("no ground-truth cuboids")
    if not 0.0 < threshold < 1.0:
        raise ContractError(f"threshold must lie in (0, 1), got {threshold}")
    hits = 0
    for g in gt:
        best = max((iou3d(p, g) for p in pred), default=0.0)
        hits += best > threshold
    return hits / len(gt)


def mean_best_iou3d(pred: Sequence[Cuboid], gt: Sequence[Cuboid]) -> float:
    if not gt:
        raise EmptyReportError("no ground-truth cuboids")
    return float(np.mean([max((iou3d(p, g) for p in pred), default=0.0) for g in gt]))


@dataclass
class Alignment:
    """Affine map ``gt ~ pred @ linear.T + offset`` and held-out correlations."""

    linear: np.ndarray
    offset: np.ndarray
    r_axes: list[float]
    r_pooled: float
    n_calibration: int
    n_evaluation: int

    def apply(self, t) -> np.ndarray:
        return np.asarray(t, dtype=np.float64) @ self.linear.T + self.offset

    def to_json(self) -> dict:
        return {
            "linear": self.linear.tolist(),
            "offset": self.offset.tolist(),
            "r_axes": [None if not np.isfinite(r) else r for r in self.r_axes],
            "r_pooled": None if not np.isfinite(self.r_pooled) else self.r_pooled,
            "n_calibration": self.n_calibration,
            "n_evaluation": self.n_evaluation,
        }


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    x, y = x - x.mean(), y - y.mean()
    denom = np.sqrt(np.dot(x, x) * np.dot(y, y))
    if denom == 0.0:
        return float("nan")
    return float(np.dot(x, y) / denom)


def align_and_correlate(pred_t, gt_t) -> Alignment:
    """Least-squares affine fit pred -> gt, Pearson r on held-out pairs.

    With 8 or more pairs the even-indexed pairs calibrate and the odd ones
    are scored; with fewer, all pairs serve both roles.
    """
    P = np.asarray(pred_t, dtype=np.float64).reshape(-1, 3)
    G = np.asarray(gt_t, dtype=np.float64).reshape(-1, 3)
    if P.shape != G.shape:
        raise ContractError("prediction and ground-truth translation counts differ")
    n = len(P)
    if n < 4:
        raise ContractError(f"need >= 4 matched pairs, got {n}")
    if n >= 8:
        cal, ev = np.arange(0, n, 2), np.arange(1, n, 2)
    else:
        cal = ev = np.arange(n)
    X = np.hstack([P[cal], np.ones((len(cal), 1))])
    if np.linalg.matrix_rank(X) < 4:
        raise DegenerateFitError("calibration translations are rank-deficient")
    coef, *_ = np.linalg.lstsq(X, G[cal], rcond=None)
    linear, offset = coef[:3].T, coef[3]
    aligned = P[ev] @ linear.T + offset
    r_axes = [_pearson(aligned[:, k], G[ev, k]) for k in range(3)]
    r_pooled = _pearson(aligned.reshape(-1), G[ev].reshape(-1))
    return Alignment(linear, offset, r_axes, r_pooled, len(cal), len(ev))


# ---------------------------------------------------------------------------
# surprise


@dataclass
class SurpriseCurve:
    video_id: str
    frames: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise ContractError("surprise values must be finite")

    @property
    def peak_frame(self) -> int:
        return int(self.frames[int(np.argmax(self.values))])

    @property
    def peak(self) -> float:
        return float(np.max(self.values)) if len(self.values) else 0.0


def disappearance_penalty(predicted_mask: np.ndarray, params: DynamicsParams) -> float:
    """Negated mean floored log mask term over the predicted object's pixels."""
    support = predicted_mask > params.mask_bin_threshold
    if not support.any():
        return 0.0
    p = np.maximum(1.0 - predicted_mask[support], params.log_floor)
    return -float(np.mean(np.log(p)))


def surprise_curve(
    tracks: Sequence[ObjectTrack],
    cam: Camera,
    params: DynamicsParams = DynamicsParams(),
    video_id: str = "",
    frames: Sequence[int] | None = None,
    visible_floor: int = 8,
) -> SurpriseCurve:
    """Per-frame surprise: summed negative physics log-likelihood.

    Objects with enough history are scored against their prediction.  A
    track missing at a frame right after its last observation counts as a
    vanishing; it adds a disappearance penalty only when its predicted
    mask shows more than ``visible_floor`` pixels (i.e. it was not hidden
    behind something nearer).
    """
    if frames is None:
        all_frames = [s.frame for t in tracks for s in t.states]
        frames = range(min(all_frames), max(all_frames) + 1) if all_frames else range(0)
    frames = list(frames)
    values = []
    for f in frames:
        preds = predict_all(tracks, cam, params, f)
        total = 0.0
        for tr in tracks:
            if tr.id not in preds:
                continue
            state = tr.state_at(f)
            pc, pm = preds[tr.id]
            if state is not None:
                total -= physics_log_likelihood((pc, pm), (state.cuboid, state.mask), params)
            elif tr.last_frame is not None and tr.history_before(f, 1)[-1].frame == f - 1:
                if np.count_nonzero(pm > params.mask_bin_threshold) > visible_floor:
                    total += disappearance_penalty(pm, params)
        values.append(total)
    return SurpriseCurve(video_id, np.asarray(frames), np.asarray(values))


def relative_accuracy(pairs: Sequence[tuple[SurpriseCurve, SurpriseCurve]]) -> float:
    """Share of (plausible, implausible) pairs ranked correctly by peak surprise.

    Ties count one half.
    """
    if not pairs:
        raise ContractError("relative accuracy needs at least one pair")
    score = 0.0
    for plausible, implausible in pairs:
        a, b = plausible.peak, implausible.peak
        score += 1.0 if b > a else 0.5 if b == a else 0.0
    return score / len(pairs)
