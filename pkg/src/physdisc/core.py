"""Shared value types and mask arithmetic.

Masks are plain ``float64`` arrays of shape ``(H, W)`` with weights in
``[0, 1]``; frames are ``(H, W, 3)`` arrays in linear RGB.  Cuboids,
cameras and tracks are small frozen containers around numpy vectors.

Euler angles use the extrinsic XYZ convention throughout the package:
rotate about the fixed x axis first, then y, then z, i.e.
``R = Rz @ Ry @ Rx``.  Sizes are full edge lengths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class ContractError(ValueError):
    """An input violates an operation's documented preconditions."""


class DimensionError(ContractError):
    """Two arrays that must share a shape do not."""


class EmptyMaskError(ContractError):
    """A mask carries no weight where some is required."""


def _vec3(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ContractError(f"{name} must have 3 components, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} must be finite, got {arr}")
    arr.setflags(write=False)
    return arr


def euler_to_matrix(rotation) -> np.ndarray:
    """Rotation matrix for extrinsic XYZ Euler angles (radians)."""
    rx, ry, rz = np.asarray(rotation, dtype=np.float64)
    cx, sx = np.cos(rx), np.sin(rx)
    cy, sy = np.cos(ry), np.sin(ry)
    cz, sz = np.cos(rz), np.sin(rz)
    Rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    Ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    Rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return Rz @ Ry @ Rx


@dataclass(frozen=True, eq=False)
class Cuboid:
    """A box given by its center, full edge lengths and Euler rotation."""

    translation: np.ndarray
    size: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "translation", _vec3(self.translation, "translation"))
        object.__setattr__(self, "size", _vec3(self.size, "size"))
        object.__setattr__(self, "rotation", _vec3(self.rotation, "rotation"))
        if np.any(self.size <= 0):
            raise ContractError(f"cuboid size must be positive, got {self.size}")

    def __eq__(self, other):
        if not isinstance(other, Cuboid):
            return NotImplemented
        return (
            np.array_equal(self.translation, other.translation)
            and np.array_equal(self.size, other.size)
            and np.array_equal(self.rotation, other.rotation)
        )

    def __repr__(self):
        t, s, q = (np.round(v, 4).tolist() for v in (self.translation, self.size, self.rotation))
        return f"Cuboid(t={t}, s={s}, q={q})"

    @property
    def is_axis_aligned(self) -> bool:
        return bool(np.all(self.rotation == 0.0))

    def corners(self) -> np.ndarray:
        """World coordinates of the 8 corners, shape ``(8, 3)``."""
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=np.float64,
        )
        local = signs * (self.size / 2.0)
        return local @ euler_to_matrix(self.rotation).T + self.translation

    def moved(self, offset) -> "Cuboid":
        return Cuboid(self.translation + np.asarray(offset, dtype=float), self.size, self.rotation)

    def to_json(self) -> dict:
        return {
            "t": [float(v) for v in self.translation],
            "s": [float(v) for v in self.size],
            "q": [float(v) for v in self.rotation],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Cuboid":
        return cls(obj["t"], obj["s"], obj.get("q", (0.0, 0.0, 0.0)))


@dataclass(frozen=True, eq=False)
class Camera:
    """Pinhole camera.  ``rotation``/``translation`` map world to camera frame.

    Camera frame convention: x right, y down, z forward (optical axis).
    ``image_size`` is ``(height, width)``.
    """

    focal: tuple[float, float]
    principal_point: tuple[float, float]
    rotation: np.ndarray
    translation: np.ndarray
    image_size: tuple[int, int]

    def __post_init__(self):
        fx, fy = (float(v) for v in self.focal)
        cx, cy = (float(v) for v in self.principal_point)
        if fx <= 0 or fy <= 0:
            raise ContractError(f"focal lengths must be positive, got {(fx, fy)}")
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-9) or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ContractError("camera rotation must be orthonormal with det +1")
        R = R.copy()
        R.setflags(write=False)
        h, w = (int(v) for v in self.image_size)
        if h <= 0 or w <= 0:
            raise ContractError(f"image size must be positive, got {(h, w)}")
        object.__setattr__(self, "focal", (fx, fy))
        object.__setattr__(self, "principal_point", (cx, cy))
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", _vec3(self.translation, "camera translation"))
        object.__setattr__(self, "image_size", (h, w))

    @property
    def height(self) -> int:
        return self.image_size[0]

    @property
    def width(self) -> int:
        return self.image_size[1]

    @property
    def intrinsics(self) -> np.ndarray:
        fx, fy = self.focal
        cx, cy = self.principal_point
        return np.array([[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])

    def world_to_camera(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def camera_to_world(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.translation) @ self.rotation

    def to_json(self) -> dict:
        return {
            "focal": list(self.focal),
            "principal_point": list(self.principal_point),
            "rotation": [float(v) for v in self.rotation.reshape(-1)],
            "translation": [float(v) for v in self.translation],
            "image_size": list(self.image_size),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Camera":
        return cls(
            focal=tuple(obj["focal"]),
            principal_point=tuple(obj["principal_point"]),
            rotation=np.asarray(obj["rotation"], dtype=np.float64).reshape(3, 3),
            translation=obj["translation"],
            image_size=tuple(obj["image_size"]),
        )


@dataclass(frozen=True)
class Frame:
    index: int
    image: np.ndarray

    def __post_init__(self):
        img = np.asarray(self.image, dtype=np.float64)
        if img.ndim != 3 or img.shape[2] != 3:
            raise ContractError(f"frame image must be HxWx3, got {img.shape}")
        if img.size and (img.min() < 0.0 or img.max() > 1.0):
            raise ContractError("frame channels must lie in [0, 1]")
        object.__setattr__(self, "image", img)

    @property
    def shape(self) -> tuple[int, int]:
        return self.image.shape[:2]


@dataclass(frozen=True)
class TrackState:
    frame: int
    cuboid: Cuboid
    mask: np.ndarray


@dataclass
class ObjectTrack:
    """Time-indexed history of one object.

    Tracks are append-only; ``states`` stays sorted by frame.
    """

    id: str
    states: list[TrackState] = field(default_factory=list)

    def __post_init__(self):
        frames = [s.frame for s in self.states]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ContractError(f"track {self.id}: frame indices must strictly increase")
        shapes = {s.mask.shape for s in self.states}
        if len(shapes) > 1:
            raise DimensionError(f"track {self.id}: masks have differing sizes {shapes}")

    @property
    def first_frame(self) -> int | None:
        return self.states[0].frame if self.states else None

    @property
    def last_frame(self) -> int | None:
        return self.states[-1].frame if self.states else None

    @property
    def frames(self) -> list[int]:
        return [s.frame for s in self.states]

    def append(self, frame: int, cuboid: Cuboid, mask: np.ndarray) -> None:
        if self.states and frame <= self.states[-1].frame:
            raise ContractError(f"track {self.id}: frame {frame} not after {self.states[-1].frame}")
        if self.states and mask.shape != self.states[-1].mask.shape:
            raise DimensionError(f"track {self.id}: mask shape {mask.shape} differs")
        self.states.append(TrackState(frame, cuboid, mask))

    def state_at(self, frame: int) -> TrackState | None:
        for s in self.states:
            if s.frame == frame:
                return s
        return None

    def history_before(self, frame: int, window: int) -> list[TrackState]:
        """The last ``window`` states strictly before ``frame``."""
        past = [s for s in self.states if s.frame < frame]
        return past[-window:]

    def truncated(self, frame: int) -> "ObjectTrack":
        """Copy holding only states before ``frame``."""
        return ObjectTrack(self.id, [s for s in self.states if s.frame < frame])


MASK_TOL = 1e-9


def as_mask(m, name: str = "mask") -> np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ContractError(f"{name} must be a non-empty 2D grid, got shape {arr.shape}")
    lo, hi = float(arr.min()), float(arr.max())
    if not (lo >= -MASK_TOL and hi <= 1.0 + MASK_TOL):
        raise ContractError(f"{name} weights must lie in [0, 1], got range [{lo:.3g}, {hi:.3g}]")
    return arr


def check_same_size(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"mask sizes differ: {a.shape} vs {b.shape}")


def binarize(m, threshold: float = 0.5) -> np.ndarray:
    """Hard mask: 1 where ``m > threshold`` (strict), else 0."""
    if not 0.0 < threshold < 1.0:
        raise ContractError(f"threshold must lie in (0, 1), got {threshold}")
    return (as_mask(m) > threshold).astype(np.float64)


def mask_overlap_pixels(a, b, bin_threshold: float = 0.5) -> int:
    """Number of pixels where both masks exceed ``bin_threshold``."""
    a, b = as_mask(a), as_mask(b)
    check_same_size(a, b)
    if not 0.0 < bin_threshold < 1.0:
        raise ContractError(f"bin_threshold must lie in (0, 1), got {bin_threshold}")
    return int(np.count_nonzero((a > bin_threshold) & (b > bin_threshold)))


def mask_area(m, threshold: float = 0.5) -> int:
    return int(np.count_nonzero(as_mask(m) > threshold))


def union_masks(masks: Iterable[np.ndarray], shape: Sequence[int]) -> np.ndarray:
    out = np.zeros(tuple(shape), dtype=np.float64)
    for m in masks:
        np.maximum(out, m, out=out)
    return out
