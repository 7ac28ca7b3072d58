"""Reading and writing frames, masks, cameras, tracks and simulator datasets.

Dataset layout (one directory per scene)::

    scene_<id>/frame_<n>.png
    scene_<id>/camera.json
    scene_<id>/gt.jsonl          one line per object per frame
    scene_<id>/masks/gt_<n>_<object>.png
    scene_<id>/meta.json         config echo, violation, pairing, alpha
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

from .core import Camera, Cuboid, Frame, ObjectTrack, TrackState

FRAME_RE = re.compile(r"^frame_(\d+)\.png$")


class DatasetError(OSError):
    """Missing or unreadable input files."""


def save_mask(path: Path, mask: np.ndarray) -> None:
    arr = np.rint(np.clip(mask, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, optimize=False)


def load_mask(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    except (OSError, ValueError) as exc:
        raise DatasetError(f"cannot read mask {path}: {exc}") from exc


def save_frame(path: Path, image: np.ndarray) -> None:
    arr = np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path, optimize=False)


def load_frame(path: Path, index: int) -> Frame:
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    except (OSError, ValueError) as exc:
        raise DatasetError(f"cannot read frame {path}: {exc}") from exc
    return Frame(index, arr)


def list_frames(video_dir: Path) -> list[tuple[int, Path]]:
    video_dir = Path(video_dir)
    if not video_dir.is_dir():
        raise DatasetError(f"{video_dir}: not a directory")
    found = []
    for p in video_dir.iterdir():
        m = FRAME_RE.match(p.name)
        if m:
            found.append((int(m.group(1)), p))
    found.sort()
    if not found:
        raise DatasetError(f"{video_dir}: no frame_<n>.png images")
    return found


def load_frames(video_dir: Path) -> list[Frame]:
    return [load_frame(p, i) for i, p in list_frames(video_dir)]


def write_json(path: Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path: Path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise DatasetError(f"missing file {path}") from exc
    except (OSError, ValueError) as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc


def save_camera(path: Path, cam: Camera) -> None:
    write_json(path, cam.to_json())


def load_camera(path: Path) -> Camera:
    return Camera.from_json(read_json(path))


def write_jsonl(path: Path, rows: Iterable[dict]) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_jsonl(path: Path) -> list[dict]:
    try:
        with open(path) as fh:
            return [json.loads(line) for line in fh if line.strip()]
    except FileNotFoundError as exc:
        raise DatasetError(f"missing file {path}") from exc
    except (OSError, ValueError) as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc


def write_tracks(out_dir: Path, tracks: Sequence[ObjectTrack], filename: str, mask_prefix: str,
                 extra: dict[str, dict] | None = None) -> Path:
    """Write one JSONL row per (track, frame) plus one mask PNG per row."""
    out_dir = Path(out_dir)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)
    rows = []
    for tr in tracks:
        for s in tr.states:
            rel = f"masks/{mask_prefix}_{s.frame:04d}_{tr.id}.png"
            save_mask(out_dir / rel, s.mask)
            row = {"id": tr.id, "frame": s.frame, "mask": rel, **s.cuboid.to_json()}
            if extra and tr.id in extra:
                row.update(extra[tr.id])
            rows.append(row)
    rows.sort(key=lambda r: (r["frame"], r["id"]))
    path = out_dir / filename
    write_jsonl(path, rows)
    return path


def read_tracks(path: Path, keep=None) -> list[ObjectTrack]:
    """Rebuild tracks from a JSONL file; ``keep(row)`` filters rows."""
    path = Path(path)
    rows = read_jsonl(path)
    by_id: dict[str, list[TrackState]] = {}
    for row in rows:
        if keep is not None and not keep(row):
            continue
        mask = load_mask(path.parent / row["mask"])
        by_id.setdefault(row["id"], []).append(TrackState(int(row["frame"]), Cuboid.from_json(row), mask))
    tracks = []
    for tid in sorted(by_id):
        states = sorted(by_id[tid], key=lambda s: s.frame)
        tracks.append(ObjectTrack(tid, states))
    return tracks


# ---------------------------------------------------------------------------
# simulator datasets


def _config_echo(cfg) -> dict:
    d = asdict(cfg)
    d["camera"] = cfg.camera.to_json()
    return json.loads(json.dumps(d, default=lambda o: np.asarray(o).tolist()))


def write_scene(scene_dir: Path, record, alpha: float | None = None, extra_meta: dict | None = None) -> Path:
    scene_dir = Path(scene_dir)
    scene_dir.mkdir(parents=True, exist_ok=True)
    for fr in record.frames:
        save_frame(scene_dir / f"frame_{fr.index:04d}.png", fr.image)
    save_camera(scene_dir / "camera.json", record.camera)
    occ = {t.id: {"occluder": True} for t in record.occluder_tracks}
    movers = {t.id: {"occluder": False} for t in record.gt_tracks}
    write_tracks(scene_dir, record.gt_tracks + record.occluder_tracks, "gt.jsonl", "gt", {**occ, **movers})
    meta = {
        "config": _config_echo(record.config),
        "violation_frame": record.violation_frame,
        "violation_kind": record.violation_kind,
        "n_frames": len(record.frames),
        "colors": {k: list(v) for k, v in record.colors.items()},
    }
    if alpha is not None:
        meta["alpha"] = alpha
    if extra_meta:
        meta.update(extra_meta)
    write_json(scene_dir / "meta.json", meta)
    return scene_dir


def load_gt(scene_dir: Path, include_occluders: bool = False) -> list[ObjectTrack]:
    keep = None if include_occluders else (lambda row: not row.get("occluder", False))
    return read_tracks(Path(scene_dir) / "gt.jsonl", keep)


def scene_dirs(dataset_dir: Path) -> list[Path]:
    dataset_dir = Path(dataset_dir)
    if not dataset_dir.is_dir():
        raise DatasetError(f"{dataset_dir}: not a directory")
    return sorted(p for p in dataset_dir.iterdir() if p.is_dir() and p.name.startswith("scene_"))
