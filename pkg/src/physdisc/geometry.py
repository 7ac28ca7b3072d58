"""Cuboid <-> mask geometry: manual backprojection, projection, ordered render."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import Camera, ContractError, Cuboid, EmptyMaskError, as_mask
from .patchwork import REFERENCE_SIZE


class BehindCameraError(ContractError):
    pass


class DegenerateExtentError(ContractError):
    pass


@dataclass(frozen=True)
class BackprojectionConfig:
    """Parameters of the hand-built mask -> cuboid inversion.

    ``depth = depth_offset + alpha * h`` where ``h`` is the height of the
    mask's lower edge above the bottom of the image, as a fraction of the
    image height.  Masks whose lower edge sits higher in the image map to
    larger depths.
    """

    alpha: float = 63.3
    boundary_count: int = 200
    fixed_rotation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    fixed_z_size: float = 1.0
    depth_offset: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ContractError(f"alpha must be positive, got {self.alpha}")
        if self.boundary_count < 1:
            raise ContractError(f"boundary_count must be >= 1, got {self.boundary_count}")
        if not self.fixed_z_size > 0:
            raise ContractError(f"fixed_z_size must be positive, got {self.fixed_z_size}")

    def scaled_to(self, height: int, width: int) -> "BackprojectionConfig":
        """Rescale ``boundary_count`` from the 1024x1024 reference by area."""
        ratio = (height * width) / (REFERENCE_SIZE[0] * REFERENCE_SIZE[1])
        return replace(self, boundary_count=max(1, int(round(self.boundary_count * ratio))))


def soft_bounds(m, boundary_count: int = 200) -> tuple[float, float, float, float]:
    """Weighted-mean extremes ``(x_min, x_max, y_min, y_max)`` in pixel indices.

    For each direction the ``boundary_count`` most extreme pixels among
    those with weight > 0.5 are averaged, weighted by their mask value.
    """
    m = as_mask(m)
    rows, cols = np.nonzero(m > 0.5)
    if rows.size == 0:
        raise EmptyMaskError("soft_bounds needs a mask with weight above 0.5")
    w = m[rows, cols]
    n = min(boundary_count, rows.size)

    def extreme(coord, largest):
        key = -coord if largest else coord
        idx = np.argsort(key, kind="stable")[:n]
        return float(np.average(coord[idx], weights=w[idx]))

    return (
        extreme(cols.astype(float), False),
        extreme(cols.astype(float), True),
        extreme(rows.astype(float), False),
        extreme(rows.astype(float), True),
    )


def normalized_base_height(y_max: float, image_height: int) -> float:
    """Height of a mask's lower pixel edge above the image bottom, in [0, 1]."""
    return (image_height - (y_max + 1.0)) / image_height


def backproject_manual(m, cam: Camera, cfg: BackprojectionConfig) -> Cuboid:
    """Invert a mask to a cuboid with fixed rotation and z extent."""
    x_min, x_max, y_min, y_max = soft_bounds(m, cfg.boundary_count)
    if x_max - x_min <= 0 or y_max - y_min <= 0:
        raise DegenerateExtentError(
            f"mask bounds are degenerate: x [{x_min}, {x_max}], y [{y_min}, {y_max}]"
        )
    depth = cfg.depth_offset + cfg.alpha * normalized_base_height(y_max, cam.height)
    fx, fy = cam.focal
    cx, cy = cam.principal_point
    # pixel-index bounds -> continuous pixel edges
    u = np.array([x_min, x_max + 1.0])
    v = np.array([y_min, y_max + 1.0])
    X = (u - cx) * depth / fx
    Y = (v - cy) * depth / fy
    center_cam = np.array([X.mean(), Y.mean(), depth])
    size = np.array([X[1] - X[0], Y[1] - Y[0], cfg.fixed_z_size])
    center = cam.camera_to_world(center_cam[None, :])[0]
    return Cuboid(center, size, cfg.fixed_rotation)


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Counter-clockwise hull (monotone chain) of 2D points."""
    pts = np.unique(points, axis=0)
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def project_points(points, cam: Camera) -> np.ndarray:
    """World points to pixel coordinates ``(u, v)``; pixel (r, c) spans [c, c+1)."""
    pc = cam.world_to_camera(points)
    if np.any(pc[:, 2] <= 0):
        raise BehindCameraError("point at or behind the camera plane")
    fx, fy = cam.focal
    cx, cy = cam.principal_point
    return np.stack([fx * pc[:, 0] / pc[:, 2] + cx, fy * pc[:, 1] / pc[:, 2] + cy], axis=1)


def fill_polygon(hull: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    """Hard mask of pixels whose centers lie inside a convex CCW polygon."""
    h, w = shape
    out = np.zeros((h, w), dtype=np.float64)
    if len(hull) < 3:
        return out
    c0 = max(int(np.floor(hull[:, 0].min() - 0.5)), 0)
    c1 = min(int(np.ceil(hull[:, 0].max() - 0.5)), w - 1)
    r0 = max(int(np.floor(hull[:, 1].min() - 0.5)), 0)
    r1 = min(int(np.ceil(hull[:, 1].max() - 0.5)), h - 1)
    if c1 < c0 or r1 < r0:
        return out
    xs = np.arange(c0, c1 + 1) + 0.5
    ys = np.arange(r0, r1 + 1) + 0.5
    X, Y = np.meshgrid(xs, ys)
    inside = np.ones_like(X, dtype=bool)
    for a, b in zip(hull, np.roll(hull, -1, axis=0)):
        inside &= (b[0] - a[0]) * (Y - a[1]) - (b[1] - a[1]) * (X - a[0]) >= -1e-12
    out[r0:r1 + 1, c0:c1 + 1] = inside
    return out


def project(c: Cuboid, cam: Camera) -> np.ndarray:
    """Hard mask of the cuboid's silhouette (filled hull of its 8 corners).

    A cuboid wholly behind the camera gives an empty mask; one that
    straddles the camera plane raises ``BehindCameraError``.
    """
    corners = c.corners()
    if np.all(cam.world_to_camera(corners)[:, 2] <= 0):
        return np.zeros(cam.image_size, dtype=np.float64)
    uv = project_points(corners, cam)
    return fill_polygon(_convex_hull(uv), cam.image_size)


def camera_distance(c: Cuboid, cam: Camera) -> float:
    return float(np.linalg.norm(cam.world_to_camera(c.translation[None, :])[0]))


def render_all(cuboids: Sequence[Cuboid], cam: Camera, return_palette: bool = False):
    """Occlusion-aware masks, nearest first, returned in input order.

    A palette starting at one is consumed by each projection in order of
    increasing camera distance.
    """
    order = sorted(range(len(cuboids)), key=lambda i: camera_distance(cuboids[i], cam))
    palette = np.ones(cam.image_size, dtype=np.float64)
    out: list[np.ndarray | None] = [None] * len(cuboids)
    for i in order:
        proj = project(cuboids[i], cam)
        out[i] = palette * proj
        palette = palette * (1.0 - proj)
    if return_palette:
        return out, palette
    return out


def calibrate_alpha(
    cuboids: Sequence[Cuboid],
    cam: Camera,
    cfg: BackprojectionConfig,
) -> float:
    """Least-squares slope mapping mask base height to camera-frame depth.

    The offset stays fixed at ``cfg.depth_offset``.
    """
    hs, ds = [], []
    for c in cuboids:
        m = project(c, cam)
        if not np.any(m > 0.5):
            continue
        _, _, _, y_max = soft_bounds(m, cfg.boundary_count)
        hs.append(normalized_base_height(y_max, cam.height))
        ds.append(cam.world_to_camera(c.translation[None, :])[0, 2] - cfg.depth_offset)
    hs, ds = np.asarray(hs), np.asarray(ds)
    denom = float(np.dot(hs, hs))
    if len(hs) == 0 or denom == 0.0:
        raise ContractError("cannot calibrate alpha: no usable projections")
    return float(np.dot(hs, ds) / denom)
