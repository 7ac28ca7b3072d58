"""Overlapping sub-patch layout and sequential merging of patch segments."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import ContractError

GRID = 8
SPAN = 2
REFERENCE_SIZE = (1024, 1024)
REFERENCE_OVERLAP = 20


@dataclass(frozen=True)
class Window:
    top: int
    left: int
    height: int
    width: int

    @property
    def rows(self) -> slice:
        return slice(self.top, self.top + self.height)

    @property
    def cols(self) -> slice:
        return slice(self.left, self.left + self.width)

    def crop(self, arr: np.ndarray) -> np.ndarray:
        return arr[self.rows, self.cols]

    def lift(self, local: np.ndarray, shape: Sequence[int]) -> np.ndarray:
        """Embed a window-local mask in a zero full-size grid."""
        out = np.zeros(tuple(shape), dtype=np.float64)
        out[self.rows, self.cols] = local
        return out


@dataclass(frozen=True)
class PatchLayout:
    image_size: tuple[int, int]
    cell: tuple[int, int]
    windows: tuple[Window, ...]

    @property
    def window_size(self) -> tuple[int, int]:
        return (self.windows[0].height, self.windows[0].width)


def make_layout(height: int, width: int) -> PatchLayout:
    """One 2x2-cell window per cell of an 8x8 grid, in raster order.

    Windows anchored in the last row or column would leave the image, so
    their anchor is clamped one cell inward; this yields 64 windows where
    the bottom/right border windows repeat coverage.
    """
    if height <= 0 or width <= 0 or height % GRID or width % GRID:
        raise ContractError(f"image size {height}x{width} must be positive and divisible by {GRID}")
    ch, cw = height // GRID, width // GRID
    last = GRID - SPAN
    windows = tuple(
        Window(min(i, last) * ch, min(j, last) * cw, SPAN * ch, SPAN * cw)
        for i in range(GRID)
        for j in range(GRID)
    )
    return PatchLayout((height, width), (ch, cw), windows)


def single_window_layout(height: int, width: int) -> PatchLayout:
    """Degenerate layout covering the whole image (single-scale mode)."""
    return PatchLayout((height, width), (height, width), (Window(0, 0, height, width),))


def scaled_overlap_threshold(height: int, width: int, base: float = REFERENCE_OVERLAP) -> float:
    """Overlap threshold rescaled from the 1024x1024 reference by area ratio."""
    return base * (height * width) / (REFERENCE_SIZE[0] * REFERENCE_SIZE[1])


@dataclass
class GlobalSegmentation:
    shape: tuple[int, int]
    objects: list[np.ndarray] = field(default_factory=list)
    provenance: list[set[int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.objects)

    @property
    def background(self) -> np.ndarray:
        bg = np.ones(self.shape)
        for m in self.objects:
            bg[m > 0.5] = 0.0
        return bg


def merge_segments(
    per_window: Iterable[tuple[int, Window, Sequence[np.ndarray]]],
    shape: Sequence[int],
    overlap_threshold: float = REFERENCE_OVERLAP,
    bin_threshold: float = 0.5,
) -> GlobalSegmentation:
    """Fold window segments into global objects, in the given order.

    ``per_window`` yields ``(window_index, window, object_masks)`` with the
    background slot already removed and masks in window coordinates.  A
    segment joins the existing object it overlaps by more than
    ``overlap_threshold`` binarized pixels (the largest overlap wins);
    otherwise it starts a new object.
    """
    shape = tuple(int(v) for v in shape)
    seg = GlobalSegmentation(shape)
    for idx, win, masks in per_window:
        for local in masks:
            hard = np.asarray(local) > bin_threshold
            if not hard.any():
                continue
            best, best_overlap = None, overlap_threshold
            for k, obj in enumerate(seg.objects):
                ov = int(np.count_nonzero(hard & win.crop(obj)))
                if ov > best_overlap:
                    best, best_overlap = k, ov
            if best is None:
                full = np.zeros(shape, dtype=bool)
                full[win.rows, win.cols] = hard
                seg.objects.append(full)
                seg.provenance.append({idx})
            else:
                seg.objects[best][win.rows, win.cols] |= hard
                seg.provenance[best].add(idx)
    seg.objects = [m.astype(np.float64) for m in seg.objects]
    return seg
