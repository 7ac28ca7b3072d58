"""Deterministic synthetic videos of flat-colored cuboids on a ground plane.

World frame matches the default camera frame: x right, y down, z away
from the camera.  Objects rest on the plane ``y = GROUND_Y``.  All
randomness comes from one ``numpy.random.default_rng(seed)`` stream
(PCG64), consumed in a fixed order, so a config always yields the same
record.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import Camera, ContractError, Cuboid, Frame, ObjectTrack, TrackState
from .geometry import BackprojectionConfig, calibrate_alpha, project_points, render_all

GROUND_Y = 2.0
DEPTH_RANGE = (13.0, 21.0)
BACKGROUND = (0.92, 0.92, 0.92)
OCCLUDER_COLOR = (0.35, 0.35, 0.35)
MOTIONS = ("straight", "back_and_forth", "rotate")
MAX_RESAMPLES = 1000


class GenerationError(RuntimeError):
    pass


def default_camera(size: int = 128) -> Camera:
    """Level pinhole camera at the world origin; focal length 2x the width."""
    return Camera(
        focal=(2.0 * size, 2.0 * size),
        principal_point=(size / 2.0, size / 2.0),
        rotation=np.eye(3),
        translation=(0.0, 0.0, 0.0),
        image_size=(size, size),
    )


@dataclass(frozen=True)
class ObjectSpec:
    """Initial state and motion law of one moving object."""

    translation: tuple[float, float, float]
    size: tuple[float, float, float]
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    motion: str = "straight"
    rotation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    angular_velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    color: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class Violation:
    kind: str
    frame: int
    object_index: int = 0
    offset: tuple[float, float, float] = (2.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("disappear", "teleport"):
            raise ContractError(f"unknown violation kind {self.kind!r}")


@dataclass(frozen=True)
class SceneConfig:
    seed: int = 0
    n_objects: int = 2
    motion: tuple[str, ...] | None = None
    occluders: int = 0
    frames: int = 20
    camera: Camera = field(default_factory=default_camera)
    violation: Violation | None = None
    period: int = 8
    objects: tuple[ObjectSpec, ...] | None = None
    speed_range: tuple[float, float] = (0.05, 0.15)
    size_range: tuple[float, float] = (0.8, 1.8)

    def __post_init__(self):
        if self.frames < 2:
            raise ContractError("a scene needs at least 2 frames")
        n = len(self.objects) if self.objects is not None else self.n_objects
        if n < 1:
            raise ContractError("a scene needs at least one object")
        if self.motion is not None and len(self.motion) != self.n_objects:
            raise ContractError("motion must name one law per object")
        if self.motion is not None and any(m not in MOTIONS for m in self.motion):
            raise ContractError(f"motion laws must be among {MOTIONS}")
        if self.violation is not None and not 0 <= self.violation.frame < self.frames:
            raise ContractError("violation frame outside the video")
        if self.period < 1:
            raise ContractError("period must be >= 1")


@dataclass
class SceneRecord:
    config: SceneConfig
    frames: list[Frame]
    gt_tracks: list[ObjectTrack]
    occluder_tracks: list[ObjectTrack]
    colors: dict[str, tuple[float, float, float]]
    violation_frame: int | None = None
    violation_kind: str | None = None

    @property
    def camera(self) -> Camera:
        return self.config.camera

    @property
    def occluder_masks(self) -> list[list[np.ndarray]]:
        return [[t.state_at(f.index).mask for t in self.occluder_tracks] for f in self.frames]

    def gt_masks(self, frame: int) -> list[np.ndarray]:
        out = []
        for t in self.gt_tracks:
            s = t.state_at(frame)
            if s is not None:
                out.append(s.mask)
        return out

    def gt_cuboids(self, frame: int) -> list[Cuboid]:
        return [s.cuboid for t in self.gt_tracks if (s := t.state_at(frame)) is not None]

    @property
    def all_tracks(self) -> list[ObjectTrack]:
        return self.gt_tracks + self.occluder_tracks


# ---------------------------------------------------------------------------
# trajectories


def _signed_steps(n_frames: int, motion: str, period: int) -> np.ndarray:
    """Cumulative displacement multiplier at each frame."""
    if motion == "back_and_forth":
        signs = np.where((np.arange(n_frames) // period) % 2 == 0, 1.0, -1.0)
        return np.concatenate([[0.0], np.cumsum(signs[:-1])])
    if motion == "straight":
        return np.arange(n_frames, dtype=np.float64)
    return np.zeros(n_frames)


def trajectory(spec: ObjectSpec, n_frames: int, period: int) -> list[Cuboid]:
    steps = _signed_steps(n_frames, spec.motion, period)
    t0, v = np.asarray(spec.translation, float), np.asarray(spec.velocity, float)
    q0, w = np.asarray(spec.rotation, float), np.asarray(spec.angular_velocity, float)
    spin = np.arange(n_frames, dtype=np.float64) if spec.motion == "rotate" else np.zeros(n_frames)
    return [Cuboid(t0 + v * steps[f], spec.size, q0 + w * spin[f]) for f in range(n_frames)]


def _aabb(c: Cuboid) -> tuple[np.ndarray, np.ndarray]:
    corners = c.corners()
    return corners.min(axis=0), corners.max(axis=0)


def _collide(a: Cuboid, b: Cuboid) -> bool:
    lo_a, hi_a = _aabb(a)
    lo_b, hi_b = _aabb(b)
    return bool(np.all(lo_a < hi_b) and np.all(lo_b < hi_a))


def _in_view(c: Cuboid, cam: Camera, margin: float = 2.0) -> bool:
    try:
        uv = project_points(c.corners(), cam)
    except ContractError:
        return False
    h, w = cam.image_size
    return bool(
        uv[:, 0].min() >= margin
        and uv[:, 0].max() <= w - margin
        and uv[:, 1].min() >= margin
        and uv[:, 1].max() <= h - margin
    )


def _distinct_colors(n: int, rng: np.random.Generator) -> list[tuple[float, float, float]]:
    h0 = rng.uniform()
    out = []
    for k in range(n):
        r, g, b = colorsys.hsv_to_rgb((h0 + k / n) % 1.0, 0.85, 0.9)
        out.append(_quantize((r, g, b)))
    return out


def _quantize(color) -> tuple[float, float, float]:
    return tuple(float(np.rint(c * 255.0) / 255.0) for c in color)


def sample_object(rng: np.random.Generator, cfg: SceneConfig, motion: str, cam: Camera) -> ObjectSpec:
    lo, hi = cfg.size_range
    sx, sy, sz = rng.uniform(lo, hi, size=3)
    z = rng.uniform(*DEPTH_RANGE)
    half_view = z * (cam.width / 2.0 - 6.0) / cam.focal[0]
    x = rng.uniform(-half_view + sx / 2.0, half_view - sx / 2.0)
    speed = rng.uniform(*cfg.speed_range)
    heading = rng.uniform(0.0, 2.0 * np.pi)
    velocity = (speed * np.cos(heading), 0.0, 0.5 * speed * np.sin(heading))
    yaw = rng.uniform(-0.4, 0.4)
    spin = rng.uniform(0.03, 0.08) * rng.choice([-1.0, 1.0])
    if motion == "rotate":
        return ObjectSpec((x, GROUND_Y - sy / 2.0, z), (sx, sy, sz), (0.0, 0.0, 0.0), motion,
                          (0.0, yaw, 0.0), (0.0, spin, 0.0))
    return ObjectSpec((x, GROUND_Y - sy / 2.0, z), (sx, sy, sz), velocity, motion)


def sample_occluder(rng: np.random.Generator, cam: Camera) -> Cuboid:
    z = rng.uniform(10.0, 11.5)
    half_view = z * (cam.width / 2.0 - 10.0) / cam.focal[0]
    sy = rng.uniform(1.5, 2.5)
    sx = rng.uniform(0.5, 0.9)
    x = rng.uniform(-half_view + sx, half_view - sx)
    return Cuboid((x, GROUND_Y - sy / 2.0, z), (sx, sy, 0.2))


def _valid(trajs: Sequence[Sequence[Cuboid]], cam: Camera) -> bool:
    n_frames = len(trajs[0])
    for f in range(n_frames):
        boxes = [t[f] for t in trajs]
        if not all(_in_view(b, cam) for b in boxes):
            return False
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                if _collide(boxes[i], boxes[j]):
                    return False
    return True


def render_frame(
    cuboids: Sequence[Cuboid],
    colors: Sequence[tuple[float, float, float]],
    cam: Camera,
    index: int,
) -> tuple[Frame, list[np.ndarray]]:
    masks, palette = render_all(cuboids, cam, return_palette=True)
    img = palette[..., None] * np.asarray(BACKGROUND)
    for m, c in zip(masks, colors):
        img = img + m[..., None] * np.asarray(c)
    img = np.rint(np.clip(img, 0.0, 1.0) * 255.0) / 255.0
    return Frame(index, img), masks


def _render_record(
    cfg: SceneConfig,
    trajs: dict[str, list[Cuboid | None]],
    colors: dict[str, tuple[float, float, float]],
    occluder_ids: Sequence[str],
    frames: Sequence[int] | None = None,
    previous: SceneRecord | None = None,
) -> tuple[list[Frame], dict[str, list[TrackState]]]:
    cam = cfg.camera
    out_frames = list(previous.frames) if previous is not None else [None] * cfg.frames
    states: dict[str, list[TrackState]] = {k: [] for k in trajs}
    if previous is not None:
        for t in previous.all_tracks:
            states[t.id] = [s for s in t.states if frames is None or s.frame not in frames]
    todo = range(cfg.frames) if frames is None else frames
    for f in todo:
        ids = [k for k in trajs if trajs[k][f] is not None]
        frame, masks = render_frame([trajs[k][f] for k in ids], [colors[k] for k in ids], cam, f)
        out_frames[f] = frame
        for k, m in zip(ids, masks):
            states[k].append(TrackState(f, trajs[k][f], m))
    for k in states:
        states[k].sort(key=lambda s: s.frame)
    return out_frames, states


def _build(cfg: SceneConfig, trajs, colors, occluder_ids) -> SceneRecord:
    frames, states = _render_record(cfg, trajs, colors, occluder_ids)
    movers = [ObjectTrack(k, states[k]) for k in trajs if k not in occluder_ids]
    occ = [ObjectTrack(k, states[k]) for k in occluder_ids]
    return SceneRecord(cfg, frames, movers, occ, dict(colors))


def generate(cfg: SceneConfig) -> SceneRecord:
    """Sample non-colliding trajectories and render every frame.

    Trajectories are resampled until no two objects' boxes intersect and
    every object stays fully in view; after ``MAX_RESAMPLES`` failures a
    ``GenerationError`` is raised.  A configured violation is injected
    afterwards, so the record shares all earlier frames with the
    violation-free scene of the same seed.
    """
    rng = np.random.default_rng(cfg.seed)
    cam = cfg.camera
    n = len(cfg.objects) if cfg.objects is not None else cfg.n_objects
    palette = _distinct_colors(n, rng)
    occluders = [sample_occluder(rng, cam) for _ in range(cfg.occluders)]
    for _ in range(MAX_RESAMPLES):
        if cfg.objects is not None:
            specs = list(cfg.objects)
        else:
            motions = cfg.motion or tuple(rng.choice(MOTIONS) for _ in range(n))
            specs = [sample_object(rng, cfg, str(m), cam) for m in motions]
        mover_trajs = [trajectory(s, cfg.frames, cfg.period) for s in specs]
        occ_trajs = [[o] * cfg.frames for o in occluders]
        if _valid(mover_trajs + occ_trajs, cam):
            break
        if cfg.objects is not None:
            raise GenerationError("explicit object specs collide or leave the view")
        if cfg.occluders:
            occluders = [sample_occluder(rng, cam) for _ in range(cfg.occluders)]
    else:
        raise GenerationError(f"no valid trajectories after {MAX_RESAMPLES} resamples")

    trajs: dict[str, list] = {}
    colors: dict[str, tuple] = {}
    for k, (spec, traj) in enumerate(zip(specs, mover_trajs)):
        trajs[f"obj{k}"] = traj
        colors[f"obj{k}"] = _quantize(spec.color) if spec.color is not None else palette[k]
    occ_ids = []
    for k, traj in enumerate(occ_trajs):
        trajs[f"occ{k}"] = traj
        colors[f"occ{k}"] = OCCLUDER_COLOR
        occ_ids.append(f"occ{k}")
    record = _build(replace(cfg, violation=None), trajs, colors, occ_ids)
    if cfg.violation is not None:
        v = cfg.violation
        record = inject_violation(record, v.kind, v.frame, v)
        record.config = cfg
    return record


def inject_violation(record: SceneRecord, kind: str, frame: int, params: Violation | None = None) -> SceneRecord:
    """Return a copy where one object disappears or teleports at ``frame``.

    Frames before ``frame`` are shared unchanged with ``record``.
    """
    params = params or Violation(kind, frame)
    if not 0 <= frame < len(record.frames):
        raise ContractError(f"violation frame {frame} outside the video")
    if not 0 <= params.object_index < len(record.gt_tracks):
        raise ContractError(f"no object with index {params.object_index}")
    target = record.gt_tracks[params.object_index]
    if target.state_at(frame) is None:
        raise ContractError(f"object {target.id} is absent at frame {frame}")
    cfg = record.config
    n = len(record.frames)
    trajs: dict[str, list] = {}
    for t in record.all_tracks:
        seq: list = [None] * n
        for s in t.states:
            seq[s.frame] = s.cuboid
        trajs[t.id] = seq
    seq = trajs[target.id]
    for f in range(frame, n):
        if seq[f] is None:
            continue
        if kind == "disappear":
            seq[f] = None
        elif kind == "teleport":
            seq[f] = seq[f].moved(params.offset)
        else:
            raise ContractError(f"unknown violation kind {kind!r}")
    occ_ids = [t.id for t in record.occluder_tracks]
    frames, states = _render_record(
        cfg, trajs, record.colors, occ_ids, frames=list(range(frame, n)), previous=record
    )
    movers = [ObjectTrack(t.id, states[t.id]) for t in record.gt_tracks]
    occ = [ObjectTrack(t.id, states[t.id]) for t in record.occluder_tracks]
    return SceneRecord(
        replace(cfg, violation=Violation(kind, frame, params.object_index, params.offset)),
        frames, movers, occ, dict(record.colors), frame, kind,
    )


def make_pair(cfg: SceneConfig) -> tuple[SceneRecord, SceneRecord]:
    """Plausible scene and its violated twin (``cfg.violation`` required)."""
    if cfg.violation is None:
        raise ContractError("make_pair needs a violation in the config")
    plausible = generate(replace(cfg, violation=None))
    implausible = inject_violation(plausible, cfg.violation.kind, cfg.violation.frame, cfg.violation)
    return plausible, implausible


# ---------------------------------------------------------------------------
# scenario classes


def large_small_config(seed: int, frames: int = 12, camera: Camera | None = None) -> SceneConfig:
    """One object wider than a sub-patch plus one small object."""
    cam = camera or default_camera()
    rng = np.random.default_rng([seed, 1])
    window_px = 2 * cam.width / 8
    z_big = rng.uniform(13.0, 14.5)
    width_big = rng.uniform(1.4, 1.9) * window_px * z_big / cam.focal[0]
    h_big = rng.uniform(1.6, 2.4)
    z_small = rng.uniform(18.0, 21.0)
    s_small = rng.uniform(0.8, 1.1)
    side = rng.choice([-1.0, 1.0])
    half_big = z_big * (cam.width / 2.0 - 6.0) / cam.focal[0]
    x_big = -side * (half_big - width_big / 2.0 - 0.3)
    half_small = z_small * (cam.width / 2.0 - 6.0) / cam.focal[0]
    x_small = side * (half_small - s_small / 2.0 - 0.6)
    speed = rng.uniform(0.03, 0.06)
    big = ObjectSpec((x_big, GROUND_Y - h_big / 2, z_big), (width_big, h_big, 1.0),
                     (side * speed, 0.0, 0.0))
    small = ObjectSpec((x_small, GROUND_Y - s_small / 2, z_small), (s_small, s_small, s_small),
                       (-side * speed, 0.0, 0.0))
    return SceneConfig(seed=seed, frames=frames, camera=cam, objects=(big, small))


def overlap_config(seed: int, frames: int = 16, camera: Camera | None = None) -> SceneConfig:
    """Two same-colored objects at different depths whose projections cross."""
    cam = camera or default_camera()
    rng = np.random.default_rng([seed, 2])
    z_near, z_far = rng.uniform(13.5, 15.0), rng.uniform(18.0, 20.0)
    s_near, s_far = rng.uniform(1.0, 1.3), rng.uniform(1.3, 1.7)
    side = rng.choice([-1.0, 1.0])
    # start apart, cross near the middle of the clip
    px_per_frame = rng.uniform(2.0, 3.0)
    v_near = px_per_frame * z_near / cam.focal[0]
    v_far = px_per_frame * z_far / cam.focal[0]
    mid = frames / 2.0
    x_near = -side * v_near * mid
    x_far = side * v_far * mid
    color = _distinct_colors(1, rng)[0]
    near = ObjectSpec((x_near, GROUND_Y - s_near / 2, z_near), (s_near, s_near, 1.0),
                      (side * v_near, 0.0, 0.0), color=color)
    far = ObjectSpec((x_far, GROUND_Y - s_far / 2, z_far), (s_far, s_far, 1.0),
                     (-side * v_far, 0.0, 0.0), color=color)
    return SceneConfig(seed=seed, frames=frames, camera=cam, objects=(near, far))


def _bbox_px(c: Cuboid, cam: Camera) -> np.ndarray:
    uv = project_points(c.corners(), cam)
    return np.concatenate([uv.min(axis=0), uv.max(axis=0)])


def _clear_jump(record: SceneRecord, frame: int, offset, gap_px: float = 4.0) -> bool:
    """True when the moved object stays in view and apart from every other object."""
    cam = record.camera
    target, others = record.gt_tracks[0], record.all_tracks[1:]
    for f in range(frame, len(record.frames)):
        moved = target.state_at(f).cuboid.moved(offset)
        if not _in_view(moved, cam):
            return False
        box = _bbox_px(moved, cam)
        for t in others:
            s = t.state_at(f)
            if s is None:
                continue
            o = _bbox_px(s.cuboid, cam)
            if box[0] < o[2] + gap_px and o[0] < box[2] + gap_px and box[1] < o[3] + gap_px and o[1] < box[3] + gap_px:
                return False
    return True


def violation_config(seed: int, kind: str, frames: int = 20, camera: Camera | None = None) -> SceneConfig:
    """Two moving objects; object 0 disappears or teleports mid-clip.

    The two objects never overlap on screen.  A teleport jumps 1.5 to 3
    units sideways to a spot where the object
    stays in view and clear of the other object until the clip ends;
    scenes without such a spot are resampled.
    """
    cam = camera or default_camera()
    rng = np.random.default_rng([seed, 3])
    frame = int(rng.integers(frames // 2 - 3, frames // 2 + 4))
    for attempt in range(MAX_RESAMPLES):
        scene_seed = seed if attempt == 0 else int(rng.integers(2**31))
        base = SceneConfig(seed=scene_seed, n_objects=2, frames=frames, camera=cam,
                           motion=("straight", "straight"))
        probe = generate(base)
        if not _clear_jump(probe, 0, (0.0, 0.0, 0.0)):
            continue
        t = probe.gt_tracks[0].state_at(frame).cuboid.translation
        toward = -1.0 if t[0] > 0 else 1.0
        for mag in (2.0, 2.5, 1.5, 3.0):
            for d in (toward, -toward):
                offset = (d * mag, 0.0, 0.0)
                if kind != "teleport" or _clear_jump(probe, frame, offset):
                    return replace(base, violation=Violation(kind, frame, 0, offset))
    raise GenerationError(f"no separated scene found for seed {seed}")


def calibrated_alpha(cam: Camera | None = None, n: int = 300, seed: int = 0,
                     cfg: BackprojectionConfig | None = None) -> float:
    """Depth slope fitted on single cuboids from the default object sampler."""
    cam = cam or default_camera()
    cfg = (cfg or BackprojectionConfig()).scaled_to(*cam.image_size)
    rng = np.random.default_rng(seed)
    scfg = SceneConfig(seed=seed, n_objects=1, camera=cam)
    boxes = []
    while len(boxes) < n:
        spec = sample_object(rng, scfg, "straight", cam)
        c = Cuboid(spec.translation, spec.size[:2] + (cfg.fixed_z_size,), cfg.fixed_rotation)
        if _in_view(c, cam):
            boxes.append(c)
    return calibrate_alpha(boxes, cam, cfg)
