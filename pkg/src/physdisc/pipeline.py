"""End-to-end discovery: segment, merge, backproject, associate, score.

The discovery loop owns all mutable state (the growing track list);
every library call it makes is pure.
"""

from __future__ import annotations

import configparser
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from . import io, simkit
from .core import Camera, ContractError, Cuboid, Frame, ObjectTrack
from .dynamics import DynamicsParams, physics_log_likelihood, predict_all
from .evalkit import (
    MatchReport,
    SurpriseCurve,
    align_and_correlate,
    iou_matrix,
    match_and_score,
    mean_best_iou3d,
    pool_reports,
    recall3d,
    relative_accuracy,
    surprise_curve,
)
from .genmodel import (
    ComponentPrediction,
    LatentPosterior,
    LossWeights,
    image_loss,
    kl_loss,
    physics_loss,
    total_loss,
)
from .geometry import BackprojectionConfig, DegenerateExtentError, backproject_manual, project
from .patchwork import (
    GlobalSegmentation,
    make_layout,
    merge_segments,
    scaled_overlap_threshold,
    single_window_layout,
)
from .segment import border_color, classical_segment

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    segmenter: str = "classical"
    slots: int = 5
    multi_scale: bool = True
    physics: bool = True
    receptive_field_scale: float = 1.25
    overlap_threshold: float = 20.0
    association_iou: float = 0.2
    max_gap: int = 3
    min_object_area: int = 6
    split_cover: float = 0.5
    visible_floor: int = 8
    camera_path: str | None = None
    external_mask_dir: str | None = None
    backprojection: BackprojectionConfig = field(default_factory=BackprojectionConfig)
    dynamics: DynamicsParams = field(default_factory=DynamicsParams)
    loss: LossWeights = field(default_factory=LossWeights)

    def __post_init__(self):
        if self.segmenter not in ("classical", "external"):
            raise ContractError(f"segmenter must be 'classical' or 'external', got {self.segmenter!r}")
        if self.slots < 2:
            raise ContractError("slots must be >= 2")
        if self.segmenter == "external" and not self.external_mask_dir:
            raise ContractError("external segmenter needs external_mask_dir")


# ---------------------------------------------------------------------------
# config files

DEFAULT_CONFIG_TEXT = """\
# physdisc pipeline configuration (INI; every key optional)

[pipeline]
# classical | external
segmenter = classical
# slot budget K per image or sub-patch
slots = 5
# false = segment the whole image at once (single-scale ablation)
multi_scale = true
# false = plain IoU association, no dynamics-guided splitting (physics ablation)
physics = true
# segmenter receptive field, as a multiple of the sub-patch side
receptive_field_scale = 1.25
# merge overlap in pixels at 1024x1024, rescaled by image area
overlap_threshold = 20
# minimum IoU with a track's last mask to continue it
association_iou = 0.2
# frames a track may go unobserved and still be continued
max_gap = 3
# segments smaller than this (pixels) are dropped
min_object_area = 6
# share of a predicted mask that must fall inside a segment for the track to claim it
split_cover = 0.5
# predicted pixels that must be visible for a vanishing to be surprising
visible_floor = 8
# camera_path = camera.json
# external_mask_dir = masks/

[backprojection]
# depth = depth_offset + alpha * (height of mask base above image bottom / image height)
# alpha = 63.3
# boundary pixels averaged per direction at 1024x1024, rescaled by image area
boundary_count = 200
fixed_z_size = 1.0
depth_offset = 1.0

[dynamics]
sigma_t = 1.0
sigma_s = 1.0
sigma_q = 1.0
history_window = 3
mask_bin_threshold = 0.5
log_floor = 1e-6

[loss]
beta = 0.5
gamma = 0.5
sigma = 0.11
sigma_b = 0.07
phase_switch_step = 100000
"""


def _coerce(value: str, target):
    if isinstance(target, bool):
        v = value.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ContractError(f"not a boolean: {value!r}")
    if isinstance(target, int) and not isinstance(target, bool):
        return int(value)
    if isinstance(target, float):
        return float(value)
    if isinstance(target, tuple):
        return tuple(float(x) for x in value.replace(",", " ").split())
    return value


def _apply_section(obj, section: configparser.SectionProxy):
    known = {f.name: f for f in fields(obj)}
    updates = {}
    for key, raw in section.items():
        if key not in known:
            raise ContractError(f"unknown config key [{section.name}] {key}")
        current = getattr(obj, key)
        if current is None:
            updates[key] = raw
        elif isinstance(current, (bool, int, float, str, tuple)):
            try:
                updates[key] = _coerce(raw, current)
            except ValueError as exc:
                raise ContractError(f"bad value for [{section.name}] {key}: {raw!r}") from exc
        else:
            raise ContractError(f"[{section.name}] {key} cannot be set from a config file")
    return replace(obj, **updates)


def load_config(path: str | Path | None = None, **overrides) -> PipelineConfig:
    cfg = PipelineConfig()
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise io.DatasetError(f"cannot read config {path}: {exc}") from exc
        blocks = {
            "backprojection": cfg.backprojection,
            "dynamics": cfg.dynamics,
            "loss": cfg.loss,
        }
        for name in parser.sections():
            if name in blocks:
                blocks[name] = _apply_section(blocks[name], parser[name])
            elif name != "pipeline":
                raise ContractError(f"unknown config section [{name}]")
        if parser.has_section("pipeline"):
            cfg = _apply_section(cfg, parser["pipeline"])
        cfg = replace(cfg, **blocks)
    return replace(cfg, **overrides) if overrides else cfg


# ---------------------------------------------------------------------------
# per-frame segmentation


def receptive_field_px(shape: Sequence[int], cfg: PipelineConfig) -> float:
    layout = make_layout(*shape)
    return cfg.receptive_field_scale * max(layout.window_size)


def segment_frame(frame: Frame, cfg: PipelineConfig) -> GlobalSegmentation:
    """Classical segmentation of one frame, per sub-patch or whole-image."""
    h, w = frame.shape
    layout = make_layout(h, w) if cfg.multi_scale else single_window_layout(h, w)
    bg = border_color(frame.image)
    field_px = receptive_field_px((h, w), cfg)

    def windows():
        for idx, win in enumerate(layout.windows):
            dec = classical_segment(
                win.crop(frame.image), cfg.slots, background_color=bg, receptive_field=field_px
            )
            yield idx, win, [m for m in dec.objects if m.any()]

    seg = merge_segments(windows(), (h, w), scaled_overlap_threshold(h, w, cfg.overlap_threshold))
    keep = [k for k, m in enumerate(seg.objects) if np.count_nonzero(m) >= cfg.min_object_area]
    seg.objects = [seg.objects[k] for k in keep]
    seg.provenance = [seg.provenance[k] for k in keep]
    return seg


def external_segments(mask_dir: Path, frame_index: int, shape, min_area: int) -> list[np.ndarray]:
    """Object masks ``frame_<n>_<k>.png`` produced by an outside segmenter."""
    paths = sorted(Path(mask_dir).glob(f"frame_{frame_index:04d}_*.png"))
    out = []
    for p in paths:
        m = io.load_mask(p)
        if m.shape != tuple(shape):
            raise ContractError(f"{p}: mask size {m.shape} != frame size {tuple(shape)}")
        hard = (m > 0.5).astype(np.float64)
        if np.count_nonzero(hard) >= min_area:
            out.append(hard)
    return out


# ---------------------------------------------------------------------------
# association


@dataclass
class Detection:
    mask: np.ndarray
    cuboid: Cuboid | None = None
    track_id: str | None = None


def _split_shared(
    dets: list[Detection],
    preds: dict[str, tuple[Cuboid, np.ndarray]],
    cfg: PipelineConfig,
) -> list[Detection]:
    """Split a segment that covers several predicted objects.

    Each track whose predicted visible mask lies mostly inside a segment
    claims it.  A segment with two or more claimants is divided: pixels go
    to the claimant whose prediction covers them, leftovers to the nearest
    prediction.
    """
    visible = {tid: pm > 0.5 for tid, (_, pm) in preds.items()}
    out: list[Detection] = []
    for det in dets:
        region = det.mask > 0.5
        claimants = [
            tid
            for tid, vis in visible.items()
            if (n := np.count_nonzero(vis)) >= cfg.min_object_area
            and np.count_nonzero(vis & region) >= cfg.split_cover * n
        ]
        if len(claimants) < 2:
            out.append(det)
            continue
        stack = np.stack([preds[t][1] for t in claimants])
        covered = stack.max(axis=0) > 0.5
        owner = np.argmax(stack, axis=0)
        if not covered.all():
            _, (ri, ci) = ndimage.distance_transform_edt(~covered, return_indices=True)
            owner = np.where(covered, owner, owner[ri, ci])
        for k, tid in enumerate(claimants):
            piece = region & (owner == k)
            if np.count_nonzero(piece) >= cfg.min_object_area:
                out.append(Detection(piece.astype(np.float64), None, tid))
    return out


def _backproject(mask: np.ndarray, cam: Camera, bcfg: BackprojectionConfig) -> Cuboid | None:
    try:
        return backproject_manual(mask, cam, bcfg)
    except DegenerateExtentError:
        return None


def _occluded_fraction(pred: tuple[Cuboid, np.ndarray], cam: Camera) -> float:
    cub, vis = pred
    try:
        amodal = np.count_nonzero(project(cub, cam) > 0.5)
    except ContractError:
        return 1.0
    if amodal == 0:
        return 1.0
    return 1.0 - np.count_nonzero(vis > 0.5) / amodal


class Discoverer:
    """Stateful frame-by-frame tracker over segmentation masks."""

    def __init__(self, cam: Camera, cfg: PipelineConfig):
        self.cam = cam
        self.cfg = cfg
        self.bcfg = cfg.backprojection.scaled_to(*cam.image_size)
        self.tracks: list[ObjectTrack] = []

    def _new_id(self) -> str:
        return f"t{len(self.tracks):04d}"

    def step(self, frame_index: int, masks: Sequence[np.ndarray]) -> None:
        cfg, cam = self.cfg, self.cam
        live = [t for t in self.tracks if frame_index - t.last_frame <= cfg.max_gap]
        preds = predict_all(live, cam, cfg.dynamics, frame_index) if cfg.physics else {}
        dets = [Detection(np.asarray(m, dtype=np.float64)) for m in masks]
        if cfg.physics and preds:
            dets = _split_shared(dets, preds, cfg)
        for d in dets:
            d.cuboid = _backproject(d.mask, cam, self.bcfg)
        dets = [d for d in dets if d.cuboid is not None or d.track_id is not None]

        assigned: dict[int, ObjectTrack] = {}
        taken: set[str] = set()
        by_id = {t.id: t for t in live}
        for i, d in enumerate(dets):
            if d.track_id is not None and d.track_id not in taken:
                assigned[i] = by_id[d.track_id]
                taken.add(d.track_id)

        free_dets = [i for i in range(len(dets)) if i not in assigned]
        free_tracks = [t for t in live if t.id not in taken]
        M = iou_matrix([dets[i].mask for i in free_dets], [t.states[-1].mask for t in free_tracks])
        pairs = [
            (float(M[ti, di]), free_dets[di], free_tracks[ti])
            for ti in range(len(free_tracks))
            for di in range(len(free_dets))
            if M[ti, di] > cfg.association_iou
        ]
        det_count: dict[int, int] = {}
        trk_count: dict[str, int] = {}
        for _, i, t in pairs:
            det_count[i] = det_count.get(i, 0) + 1
            trk_count[t.id] = trk_count.get(t.id, 0) + 1
        ambiguous = [p for p in pairs if det_count[p[1]] > 1 or trk_count[p[2].id] > 1]
        clear = [p for p in pairs if p not in ambiguous]
        if cfg.physics:
            scored = []
            for iou, i, t in ambiguous:
                pred = preds.get(t.id) or (t.states[-1].cuboid, t.states[-1].mask)
                obs_cub = dets[i].cuboid or pred[0]
                score = physics_log_likelihood(pred, (obs_cub, dets[i].mask), cfg.dynamics)
                scored.append((score, iou, i, t))
            ranked = [(i, t) for _, _, i, t in sorted(scored, key=lambda s: (-s[0], -s[1], s[2], s[3].id))]
        else:
            ranked = [(i, t) for _, i, t in sorted(ambiguous, key=lambda p: (-p[0], p[1], p[2].id))]
        ordered = [(i, t) for _, i, t in sorted(clear, key=lambda p: (-p[0], p[1], p[2].id))] + ranked
        for i, t in ordered:
            if i in assigned or t.id in taken:
                continue
            assigned[i] = t
            taken.add(t.id)

        for i, d in enumerate(dets):
            track = assigned.get(i)
            cub = d.cuboid
            if track is not None and cfg.physics and track.id in preds:
                if cub is None or _occluded_fraction(preds[track.id], cam) > 0.1:
                    cub = preds[track.id][0]
            if cub is None:
                continue
            if track is None:
                track = ObjectTrack(self._new_id())
                self.tracks.append(track)
            track.append(frame_index, cub, d.mask)


def discover_frames(
    frames: Sequence[Frame],
    cam: Camera,
    cfg: PipelineConfig,
    segments: Callable[[Frame], list[np.ndarray]] | None = None,
) -> list[ObjectTrack]:
    if segments is None:
        if cfg.segmenter == "external":
            segments = lambda fr: external_segments(
                Path(cfg.external_mask_dir), fr.index, fr.shape, cfg.min_object_area
            )
        else:
            segments = lambda fr: segment_frame(fr, cfg).objects
    disc = Discoverer(cam, cfg)
    for fr in frames:
        disc.step(fr.index, segments(fr))
    return disc.tracks


def resolve_alpha(cfg: PipelineConfig, video_dir: Path | None) -> PipelineConfig:
    """Use the dataset's calibrated alpha unless the config file set one."""
    if video_dir is not None and (Path(video_dir) / "meta.json").exists():
        meta = io.read_json(Path(video_dir) / "meta.json")
        if "alpha" in meta and cfg.backprojection.alpha == BackprojectionConfig().alpha:
            return replace(cfg, backprojection=replace(cfg.backprojection, alpha=float(meta["alpha"])))
    return cfg


def run_discover(video_dir: Path, cfg: PipelineConfig, out_dir: Path) -> Path:
    """Discover tracks in a frame directory; writes ``tracks.jsonl`` and masks."""
    video_dir = Path(video_dir)
    frames_list = io.list_frames(video_dir)
    cam_path = Path(cfg.camera_path) if cfg.camera_path else video_dir / "camera.json"
    if not cam_path.exists():
        raise io.DatasetError(f"{video_dir}: missing camera file {cam_path}")
    cam = io.load_camera(cam_path)
    frames = [io.load_frame(p, i) for i, p in frames_list]
    for fr in frames:
        if fr.shape != cam.image_size:
            raise ContractError(f"frame {fr.index} size {fr.shape} != camera image size {cam.image_size}")
    cfg = resolve_alpha(cfg, video_dir)
    tracks = discover_frames(frames, cam, cfg)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return io.write_tracks(out_dir, tracks, "tracks.jsonl", "obj")


# ---------------------------------------------------------------------------
# evaluation helpers


def visible_gt(record_tracks: Sequence[ObjectTrack], frame: int, min_area: int) -> list:
    out = []
    for t in record_tracks:
        s = t.state_at(frame)
        if s is not None and np.count_nonzero(s.mask > 0.5) >= min_area:
            out.append(s)
    return out


def score_tracks(
    pred_tracks: Sequence[ObjectTrack],
    gt_tracks: Sequence[ObjectTrack],
    frames: Sequence[int],
    min_area: int = 6,
) -> dict:
    """2D and 3D metrics of discovered tracks against ground truth."""
    reports: list[MatchReport] = []
    pairs_pred, pairs_gt = [], []
    pred_boxes, gt_boxes = [], []
    for f in frames:
        gts = visible_gt(gt_tracks, f, min_area)
        if not gts:
            continue
        preds = [s for t in pred_tracks if (s := t.state_at(f)) is not None]
        rep = match_and_score([p.mask for p in preds], [g.mask for g in gts])
        reports.append(rep)
        if preds:
            M = iou_matrix([p.mask for p in preds], [g.mask for g in gts])
            for gi, g in enumerate(gts):
                pi = int(np.argmax(M[gi]))
                if M[gi, pi] > 0.5:
                    pairs_pred.append(preds[pi].cuboid)
                    pairs_gt.append(g.cuboid)
        pred_boxes.append([p.cuboid for p in preds])
        gt_boxes.append([g.cuboid for g in gts])
    pooled = pool_reports(reports)
    result = {"segmentation": pooled.to_json()}
    alignment = None
    if len(pairs_pred) >= 4:
        try:
            alignment = align_and_correlate([c.translation for c in pairs_pred], [c.translation for c in pairs_gt])
        except ContractError as exc:
            log.info("alignment skipped: %s", exc)
    if alignment is not None:
        result["alignment"] = alignment.to_json()
        pred_boxes = [
            [Cuboid(alignment.apply(c.translation[None, :])[0], c.size, c.rotation) for c in fb]
            for fb in pred_boxes
        ]
    ious = [mean_best_iou3d(p, g) for p, g in zip(pred_boxes, gt_boxes)]
    recalls = [recall3d(p, g) for p, g in zip(pred_boxes, gt_boxes)]
    result["iou3d"] = float(np.mean(ious)) if ious else 0.0
    result["recall3d"] = float(np.mean(recalls)) if recalls else 0.0
    return result


def oracle_tracks(scene_dir: Path) -> list[ObjectTrack]:
    """Ground-truth tracks (movers and occluders) as if perfectly discovered."""
    return io.load_gt(scene_dir, include_occluders=True)


def scene_surprise(scene_dir: Path, cfg: PipelineConfig, mode: str = "discover") -> SurpriseCurve:
    scene_dir = Path(scene_dir)
    cam = io.load_camera(scene_dir / "camera.json")
    n = len(io.list_frames(scene_dir))
    if mode == "oracle":
        tracks = oracle_tracks(scene_dir)
    elif mode == "discover":
        cfg = resolve_alpha(cfg, scene_dir)
        tracks = discover_frames(io.load_frames(scene_dir), cam, cfg)
    else:
        raise ContractError(f"unknown surprise mode {mode!r}")
    return surprise_curve(tracks, cam, cfg.dynamics, scene_dir.name, range(n), cfg.visible_floor)


def find_pairs(dataset_dir: Path) -> list[tuple[Path, Path]]:
    """Match plausible/implausible scenes via ``pair_id``/``role`` in meta.json."""
    groups: dict[str, dict[str, Path]] = {}
    for d in io.scene_dirs(dataset_dir):
        meta = io.read_json(d / "meta.json")
        pid, role = meta.get("pair_id"), meta.get("role")
        if pid is None or role not in ("plausible", "implausible"):
            groups.setdefault(f"?{d.name}", {})["unpaired"] = d
            continue
        groups.setdefault(str(pid), {})[role] = d
    bad = sorted(
        next(iter(g.values())).name for g in groups.values() if set(g) != {"plausible", "implausible"}
    )
    if bad:
        raise ContractError(f"unpaired scenes: {', '.join(bad)}")
    if not groups:
        raise ContractError(f"{dataset_dir}: no scenes")
    return [(groups[k]["plausible"], groups[k]["implausible"]) for k in sorted(groups)]


@dataclass
class PairResult:
    pair_id: str
    plausible: SurpriseCurve
    implausible: SurpriseCurve
    violation_frame: int | None

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "plausible_peak": self.plausible.peak,
            "implausible_peak": self.implausible.peak,
            "implausible_peak_frame": self.implausible.peak_frame,
            "violation_frame": self.violation_frame,
        }


def run_pair_experiment(dataset_dir: Path, cfg: PipelineConfig, mode: str = "discover") -> dict:
    """Surprise on every plausible/implausible pair and the relative accuracy."""
    results = []
    for p_dir, i_dir in find_pairs(dataset_dir):
        meta = io.read_json(i_dir / "meta.json")
        results.append(
            PairResult(
                str(meta.get("pair_id")),
                scene_surprise(p_dir, cfg, mode),
                scene_surprise(i_dir, cfg, mode),
                meta.get("violation_frame"),
            )
        )
    acc = relative_accuracy([(r.plausible, r.implausible) for r in results])
    localized = [
        abs(r.implausible.peak_frame - r.violation_frame) <= 2
        for r in results
        if r.violation_frame is not None
    ]
    return {
        "mode": mode,
        "relative_accuracy": acc,
        "n_pairs": len(results),
        "peak_within_2_frames": float(np.mean(localized)) if localized else None,
        "pairs": [r.to_json() for r in results],
        "_curves": results,
    }


# ---------------------------------------------------------------------------
# loss evaluation over stored component predictions


def load_components(path: Path) -> tuple[list[ComponentPrediction], list[LatentPosterior]]:
    """Read one frame's predicted mixture components from an ``.npz`` file.

    Arrays: ``masks`` (K, H, W), ``means`` (K, H, W, 3), ``decoded`` (K, H, W)
    and optionally ``mu`` / ``logvar`` (K, D).  Component 0 is the background.
    """
    try:
        with np.load(path) as z:
            data = {k: np.asarray(z[k], dtype=np.float64) for k in z.files}
    except (OSError, ValueError) as exc:
        raise io.DatasetError(f"cannot read components {path}: {exc}") from exc
    for key in ("masks", "means", "decoded"):
        if key not in data:
            raise ContractError(f"{path}: missing array {key!r}")
    k = len(data["masks"])
    if len(data["means"]) != k or len(data["decoded"]) != k:
        raise ContractError(f"{path}: component arrays disagree on K")
    comps = [
        ComponentPrediction(data["masks"][i], data["means"][i], data["decoded"][i], is_background=(i == 0))
        for i in range(k)
    ]
    posts = []
    if "mu" in data:
        if "logvar" not in data or data["logvar"].shape != data["mu"].shape:
            raise ContractError(f"{path}: mu and logvar must be given together with equal shapes")
        posts = [LatentPosterior(m, lv) for m, lv in zip(data["mu"], data["logvar"])]
    return comps, posts


def track_physics_loglik(tracks: Sequence[ObjectTrack], cam: Camera, params: DynamicsParams) -> dict[int, float]:
    """Summed physics log-likelihood per frame over tracks with a prediction."""
    frames = sorted({s.frame for t in tracks for s in t.states})
    out = {}
    for f in frames:
        preds = predict_all(tracks, cam, params, f)
        total = 0.0
        for t in tracks:
            s = t.state_at(f)
            if s is not None and t.id in preds:
                total += physics_log_likelihood(preds[t.id], (s.cuboid, s.mask), params)
        out[f] = total
    return out


def loss_report(
    video_dir: Path,
    components_dir: Path,
    cfg: PipelineConfig,
    tracks_path: Path | None = None,
    step: int = 0,
) -> dict:
    """All loss terms per frame for stored component predictions."""
    video_dir, components_dir = Path(video_dir), Path(components_dir)
    frames = io.load_frames(video_dir)
    phys = {}
    if tracks_path is not None:
        cam = io.load_camera(Path(cfg.camera_path) if cfg.camera_path else video_dir / "camera.json")
        phys = track_physics_loglik(io.read_tracks(tracks_path), cam, cfg.dynamics)
    rows = []
    for fr in frames:
        path = components_dir / f"components_{fr.index:04d}.npz"
        if not path.exists():
            raise io.DatasetError(f"missing components file {path}")
        comps, posts = load_components(path)
        l_img = image_loss(fr.image, comps, cfg.loss)
        l_kl = kl_loss(posts, [(c.mask, c.decoded_mask) for c in comps], cfg.loss)
        l_phys = physics_loss([phys[fr.index]]) if fr.index in phys else 0.0
        rows.append(
            {
                "frame": fr.index,
                "image": l_img,
                "kl": l_kl,
                "physics": l_phys,
                "total": total_loss(step, l_img, l_kl, l_phys, cfg.loss),
            }
        )
    keys = ("image", "kl", "physics", "total")
    return {
        "step": step,
        "physics_active": step >= cfg.loss.phase_switch_step,
        "frames": rows,
        "sum": {k: float(sum(r[k] for r in rows)) for k in keys},
    }


# ---------------------------------------------------------------------------
# datasets


def write_pair_dataset(out_dir: Path, seeds: Sequence[int], kinds: Sequence[str], frames: int = 20) -> list[Path]:
    """Plausible/implausible simulator pairs, tagged by ``pair_id`` and ``role``."""
    out_dir = Path(out_dir)
    written = []
    for kind in kinds:
        for seed in seeds:
            plausible, implausible = simkit.make_pair(simkit.violation_config(seed, kind, frames))
            alpha = simkit.calibrated_alpha(plausible.camera)
            pid = f"{kind}_{seed:04d}"
            for role, rec in (("plausible", plausible), ("implausible", implausible)):
                written.append(
                    io.write_scene(out_dir / f"scene_{pid}_{role}", rec, alpha, {"pair_id": pid, "role": role})
                )
    return written
