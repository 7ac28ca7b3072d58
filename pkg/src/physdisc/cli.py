"""Command-line interface.

Exit codes: 0 success, 2 contract violation (bad input values or shapes,
bad config), 1 I/O error (missing or unreadable files).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io, pipeline, simkit
from .core import ContractError
from .evalkit import EmptyReportError

log = logging.getLogger("physdisc")

SCENARIOS = ("random", "large-small", "overlap", "pairs")


def _config(args) -> pipeline.PipelineConfig:
    overrides = {}
    if getattr(args, "single_scale", False):
        overrides["multi_scale"] = False
    if getattr(args, "no_physics", False):
        overrides["physics"] = False
    return pipeline.load_config(args.config, **overrides)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> None:
    out = _out(args)
    seeds = range(args.seed, args.seed + args.n)
    if args.scenario == "pairs":
        kinds = ("teleport", "disappear") if args.violation == "both" else (args.violation,)
        paths = pipeline.write_pair_dataset(out, seeds, kinds, args.frames)
    else:
        make = {
            "random": lambda s: simkit.SceneConfig(seed=s, n_objects=args.objects, frames=args.frames,
                                                   occluders=args.occluders),
            "large-small": lambda s: simkit.large_small_config(s, args.frames),
            "overlap": lambda s: simkit.overlap_config(s, args.frames),
        }[args.scenario]
        paths = []
        alpha = None
        for s in seeds:
            rec = simkit.generate(make(s))
            if alpha is None:
                alpha = simkit.calibrated_alpha(rec.camera)
            paths.append(io.write_scene(out / f"scene_{s:04d}", rec, alpha, {"scenario": args.scenario}))
    io.write_json(out / "dataset.json", {"scenario": args.scenario, "scenes": [p.name for p in paths]})
    print(f"wrote {len(paths)} scenes to {out}")


def cmd_segment(args) -> None:
    cfg = _config(args)
    out = _out(args)
    (out / "masks").mkdir(exist_ok=True)
    rows = []
    for idx, path in io.list_frames(args.video_dir):
        frame = io.load_frame(path, idx)
        seg = pipeline.segment_frame(frame, cfg)
        for k, m in enumerate(seg.objects):
            rel = f"masks/seg_{idx:04d}_{k:02d}.png"
            io.save_mask(out / rel, m)
            rows.append({"frame": idx, "segment": k, "mask": rel, "area": int(np.count_nonzero(m > 0.5)),
                         "windows": list(seg.provenance[k])})
    io.write_jsonl(out / "segments.jsonl", rows)
    print(f"wrote {len(rows)} segments to {out}")


def cmd_discover(args) -> None:
    cfg = _config(args)
    path = pipeline.run_discover(Path(args.video_dir), cfg, _out(args))
    print(f"wrote {path}")


def cmd_eval(args) -> None:
    cfg = _config(args)
    out = _out(args)
    scene = Path(args.scene_dir)
    if args.tracks:
        tracks = io.read_tracks(args.tracks)
    else:
        cfg = pipeline.resolve_alpha(cfg, scene)
        cam = io.load_camera(Path(cfg.camera_path) if cfg.camera_path else scene / "camera.json")
        tracks = pipeline.discover_frames(io.load_frames(scene), cam, cfg)
    gt = io.load_gt(scene)
    frames = [i for i, _ in io.list_frames(scene)]
    report = pipeline.score_tracks(tracks, gt, frames, cfg.min_object_area)
    per_frame = report["segmentation"].pop("per_frame")
    io.write_json(out / "report.json", report)
    _write_csv(out / "per_frame.csv", ["row", "mean_iou", "detection_rate", "n_objects"],
               [[k, r["mean_iou"], r["detection_rate"], r["n_objects"]] for k, r in enumerate(per_frame)])
    print(f"mean IoU {report['segmentation']['mean_iou']:.3f}  "
          f"detection {report['segmentation']['detection_rate']:.3f}")


def _write_curve(out: Path, stem: str, curve, violation_frame=None) -> None:
    from .plotting import plot_surprise

    _write_csv(out / f"{stem}.csv", ["frame", "surprise"], zip(curve.frames.tolist(), curve.values.tolist()))
    plot_surprise([curve], out / f"{stem}.png", violation_frame)


def cmd_surprise(args) -> None:
    cfg = _config(args)
    out = _out(args)
    mode = "oracle" if args.oracle else "discover"
    curve = pipeline.scene_surprise(Path(args.scene_dir), cfg, mode)
    meta_path = Path(args.scene_dir) / "meta.json"
    vf = io.read_json(meta_path).get("violation_frame") if meta_path.exists() else None
    _write_curve(out, "surprise", curve, vf)
    io.write_json(out / "surprise.json", {"video_id": curve.video_id, "mode": mode, "peak": curve.peak,
                                          "peak_frame": curve.peak_frame, "violation_frame": vf})
    print(f"peak surprise {curve.peak:.3f} at frame {curve.peak_frame}")


def cmd_pair_exp(args) -> None:
    cfg = _config(args)
    out = _out(args)
    mode = "oracle" if args.oracle else "discover"
    report = pipeline.run_pair_experiment(Path(args.dataset_dir), cfg, mode)
    results = report.pop("_curves")
    io.write_json(out / "report.json", report)
    rows = []
    (out / "curves").mkdir(exist_ok=True)
    from .plotting import plot_surprise

    for r in results:
        for role, c in (("plausible", r.plausible), ("implausible", r.implausible)):
            rows.extend([r.pair_id, role, f, v] for f, v in zip(c.frames.tolist(), c.values.tolist()))
        plot_surprise([r.plausible, r.implausible], out / "curves" / f"{r.pair_id}.png", r.violation_frame,
                      title=r.pair_id)
    _write_csv(out / "curves.csv", ["pair_id", "role", "frame", "surprise"], rows)
    print(f"relative accuracy {report['relative_accuracy']:.3f} over {report['n_pairs']} pairs")


def cmd_eval_loss(args) -> None:
    cfg = _config(args)
    out = _out(args)
    report = pipeline.loss_report(Path(args.video_dir), Path(args.components_dir), cfg,
                                  Path(args.tracks) if args.tracks else None, args.step)
    io.write_json(out / "losses.json", report)
    keys = ("image", "kl", "physics", "total")
    _write_csv(out / "losses.csv", ["frame", *keys], [[r["frame"], *(r[k] for k in keys)] for r in report["frames"]])
    from .plotting import plot_loss_curve

    plot_loss_curve([r["frame"] for r in report["frames"]], [r["total"] for r in report["frames"]],
                    out / "losses.png", xlabel="frame")
    print(f"total loss {report['sum']['total']:.3f}")


def cmd_config(args) -> None:
    sys.stdout.write(pipeline.DEFAULT_CONFIG_TEXT)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file (see `physdisc config`)")
    common.add_argument("--seed", type=int, default=0, help="base random seed")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--single-scale", action="store_true", help="segment whole images, no sub-patches")
    common.add_argument("--no-physics", action="store_true", help="disable dynamics-guided association")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="physdisc", description="Discover and check physical objects in video.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a simulator dataset")
    g.add_argument("--scenario", choices=SCENARIOS, default="random")
    g.add_argument("--n", type=int, default=10, help="number of scenes (or pairs per violation kind)")
    g.add_argument("--frames", type=int, default=20)
    g.add_argument("--objects", type=int, default=2)
    g.add_argument("--occluders", type=int, default=0)
    g.add_argument("--violation", choices=("teleport", "disappear", "both"), default="both")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("segment", parents=[common], help="per-frame object masks")
    s.add_argument("video_dir")
    s.set_defaults(func=cmd_segment)

    d = sub.add_parser("discover", parents=[common], help="discover object tracks in a video")
    d.add_argument("video_dir")
    d.set_defaults(func=cmd_discover)

    e = sub.add_parser("eval", parents=[common], help="score tracks against a simulator scene")
    e.add_argument("scene_dir")
    e.add_argument("--tracks", help="tracks.jsonl from `discover` (default: run discovery)")
    e.set_defaults(func=cmd_eval)

    su = sub.add_parser("surprise", parents=[common], help="per-frame surprise curve")
    su.add_argument("scene_dir")
    su.add_argument("--oracle", action="store_true", help="use ground-truth tracks")
    su.set_defaults(func=cmd_surprise)

    pe = sub.add_parser("pair-exp", parents=[common], help="relative accuracy on plausible/implausible pairs")
    pe.add_argument("dataset_dir")
    pe.add_argument("--oracle", action="store_true", help="use ground-truth tracks")
    pe.set_defaults(func=cmd_pair_exp)

    el = sub.add_parser("eval-loss", parents=[common], help="loss terms for stored component predictions")
    el.add_argument("video_dir")
    el.add_argument("components_dir", help="directory of components_<n>.npz files")
    el.add_argument("--tracks", help="tracks.jsonl for the physics term")
    el.add_argument("--step", type=int, default=0, help="training step (selects the loss phase)")
    el.set_defaults(func=cmd_eval_loss)

    c = sub.add_parser("config", help="print the default config file")
    c.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ContractError, EmptyReportError, simkit.GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
