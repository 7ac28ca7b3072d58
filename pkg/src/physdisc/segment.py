"""Image decomposition into ordered masks that sum to one.

``decompose`` runs the stick-breaking recursion over any attention
function; ``classical_segment`` is a learning-free stand-in built from
color quantization and connected components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np
from scipy import ndimage

from .core import ContractError, Frame

PARTITION_TOL = 1e-6
DEFAULT_SLOTS = 5

# 4-connectivity structuring element
_FOUR = ndimage.generate_binary_structure(2, 1)


class AttentionFn(Protocol):
    def __call__(self, image: np.ndarray, context: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class Segmenter:
    """An attention function plus a slot budget ``slots`` (K)."""

    attention: Callable[[np.ndarray, np.ndarray], np.ndarray]
    slots: int = DEFAULT_SLOTS


@dataclass
class Decomposition:
    """Ordered masks (slot 0 is the background) and the context trace.

    ``latents`` holds an optional per-slot vector; learning-free
    segmenters leave every entry ``None``.
    """

    masks: list[np.ndarray]
    contexts: list[np.ndarray]
    latents: list[np.ndarray | None] = field(default_factory=list)

    def __post_init__(self):
        if not self.latents:
            self.latents = [None] * len(self.masks)

    @property
    def background(self) -> np.ndarray:
        return self.masks[0]

    @property
    def objects(self) -> list[np.ndarray]:
        return self.masks[1:]

    def check(self, tol: float = PARTITION_TOL) -> None:
        total = np.sum(self.masks, axis=0)
        err = float(np.max(np.abs(total - 1.0)))
        if err > tol:
            raise ContractError(f"masks do not sum to one (max error {err:.3g})")
        for m in self.masks:
            if m.min() < -tol or m.max() > 1.0 + tol:
                raise ContractError("mask weights outside [0, 1]")


def decompose(image, seg: Segmenter) -> Decomposition:
    """Run K-1 attention steps from an all-ones context.

    The last slot receives whatever context is left, so the masks sum to
    one exactly for any attention map in ``[0, 1]``.
    """
    if seg.slots < 2:
        raise ContractError(f"slot budget must be >= 2, got {seg.slots}")
    img = image.image if isinstance(image, Frame) else np.asarray(image, dtype=np.float64)
    context = np.ones(img.shape[:2], dtype=np.float64)
    masks, contexts = [], [context]
    for _ in range(seg.slots - 1):
        a = np.asarray(seg.attention(img, context), dtype=np.float64)
        if a.shape != context.shape:
            raise ContractError(f"attention map shape {a.shape} != image shape {context.shape}")
        if not np.all(np.isfinite(a)) or a.min() < 0.0 or a.max() > 1.0:
            raise ContractError("attention output outside [0, 1]")
        masks.append(context * a)
        context = context * (1.0 - a)
        contexts.append(context)
    masks.append(context)
    return Decomposition(masks, contexts)


def from_hard_masks(background: np.ndarray, objects: list[np.ndarray], slots: int) -> Decomposition:
    """Pack disjoint hard object masks into a ``slots``-long decomposition."""
    shape = background.shape
    padded = list(objects) + [np.zeros(shape)] * (slots - 1 - len(objects))
    masks = [background] + padded
    contexts = [np.ones(shape)]
    for m in masks[:-1]:
        contexts.append(np.clip(contexts[-1] - m, 0.0, 1.0))
    return Decomposition(masks, contexts)


# ---------------------------------------------------------------------------
# classical baseline


def _pack_colors(img: np.ndarray) -> np.ndarray:
    q = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.int64)
    return (q[..., 0] << 16) | (q[..., 1] << 8) | q[..., 2]


def _unpack_colors(codes: np.ndarray) -> np.ndarray:
    return np.stack([(codes >> 16) & 255, (codes >> 8) & 255, codes & 255], axis=1) / 255.0


def kmeans_colors(colors: np.ndarray, weights: np.ndarray, k: int, iters: int = 25):
    """Weighted Lloyd iterations with deterministic farthest-first seeding.

    Returns ``(labels, centroids)``.  With at most ``k`` distinct colors
    every color keeps its own cluster.
    """
    n = len(colors)
    if n <= k:
        return np.arange(n), colors.copy()
    seeds = [int(np.argmax(weights))]
    d2 = np.sum((colors - colors[seeds[0]]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(d2 * weights))
        if d2[nxt] == 0.0:
            break
        seeds.append(nxt)
        d2 = np.minimum(d2, np.sum((colors - colors[nxt]) ** 2, axis=1))
    centroids = colors[seeds].copy()
    labels = np.zeros(n, dtype=np.int64)
    for it in range(iters):
        dist = np.sum((colors[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new = np.argmin(dist, axis=1)
        if it and np.array_equal(new, labels):
            break
        labels = new
        for j in range(len(centroids)):
            sel = labels == j
            if np.any(sel):
                centroids[j] = np.average(colors[sel], axis=0, weights=weights[sel])
    return labels, centroids


def _split_by_receptive_field(comp: np.ndarray, field_px: float) -> list[np.ndarray]:
    rows = np.flatnonzero(comp.any(axis=1))
    cols = np.flatnonzero(comp.any(axis=0))
    r0, r1, c0, c1 = rows[0], rows[-1] + 1, cols[0], cols[-1] + 1
    ny = max(1, math.ceil((r1 - r0) / field_px))
    nx = max(1, math.ceil((c1 - c0) / field_px))
    if nx == 1 and ny == 1:
        return [comp]
    redges = np.linspace(r0, r1, ny + 1).round().astype(int)
    cedges = np.linspace(c0, c1, nx + 1).round().astype(int)
    pieces = []
    for i in range(ny):
        for j in range(nx):
            piece = np.zeros_like(comp)
            piece[redges[i]:redges[i + 1], cedges[j]:cedges[j + 1]] = comp[
                redges[i]:redges[i + 1], cedges[j]:cedges[j + 1]
            ]
            if piece.any():
                pieces.append(piece)
    return pieces


def classical_segment(
    image,
    K: int = DEFAULT_SLOTS,
    background_color=None,
    receptive_field: float | None = None,
    background_tolerance: float = 0.1,
) -> Decomposition:
    """Color-quantize, then emit 4-connected components as hard slots.

    Colors are clustered with k-means (k = K).  The background cluster is
    the one nearest ``background_color`` when given (and within
    ``background_tolerance`` in RGB distance), otherwise the largest
    cluster touching the image border.  Components of the remaining
    clusters are sorted by area and the K-1 largest become object slots;
    everything else falls to the background.

    ``receptive_field`` (pixels) bounds how far apart two pixels of one
    segment may lie: a component whose bounding box is larger in either
    direction is cut into equal tiles no larger than the field.
    """
    if K < 2:
        raise ContractError(f"slot budget must be >= 2, got {K}")
    img = image.image if isinstance(image, Frame) else np.asarray(image, dtype=np.float64)
    h, w = img.shape[:2]
    codes = _pack_colors(img)
    uniq, inverse, counts = np.unique(codes.reshape(-1), return_inverse=True, return_counts=True)
    colors = _unpack_colors(uniq)
    labels, centroids = kmeans_colors(colors, counts.astype(np.float64), K)
    label_map = labels[inverse].reshape(h, w)
    n_clusters = len(centroids)
    sizes = np.bincount(label_map.reshape(-1), minlength=n_clusters)

    bg = None
    if background_color is not None:
        dist = np.linalg.norm(centroids - np.asarray(background_color, dtype=float), axis=1)
        present = sizes > 0
        if np.any(present):
            cand = int(np.argmin(np.where(present, dist, np.inf)))
            if dist[cand] <= background_tolerance:
                bg = cand
    else:
        border = np.concatenate([label_map[0], label_map[-1], label_map[:, 0], label_map[:, -1]])
        touching = np.unique(border)
        bg = int(touching[np.argmax(sizes[touching])])

    components = []
    for c in range(n_clusters):
        if c == bg or sizes[c] == 0:
            continue
        lab, n = ndimage.label(label_map == c, structure=_FOUR)
        for i in range(1, n + 1):
            comp = lab == i
            if receptive_field is not None:
                components.extend(_split_by_receptive_field(comp, receptive_field))
            else:
                components.append(comp)

    def sort_key(m):
        return (-int(m.sum()), int(np.argmax(m.reshape(-1))))

    components.sort(key=sort_key)
    objects = [m.astype(np.float64) for m in components[: K - 1]]
    background = np.ones((h, w))
    for m in objects:
        background -= m
    dec = from_hard_masks(background, objects, K)
    dec.check()
    return dec


def border_color(image) -> np.ndarray:
    """Most frequent color along the image border."""
    img = image.image if isinstance(image, Frame) else np.asarray(image, dtype=np.float64)
    codes = _pack_colors(img)
    border = np.concatenate([codes[0], codes[-1], codes[:, 0], codes[:, -1]])
    uniq, counts = np.unique(border, return_counts=True)
    return _unpack_colors(uniq[[int(np.argmax(counts))]])[0]


def classical_segmenter(K: int = DEFAULT_SLOTS, **kwargs) -> Callable[[np.ndarray], Decomposition]:
    return lambda img: classical_segment(img, K, **kwargs)
