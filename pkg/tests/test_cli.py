import json

import numpy as np
import pytest

from physdisc import io
from physdisc.cli import main


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["gen", "--scenario", "random", "--n", "1", "--frames", "6", "--out", str(root / "ds")]) == 0
    return root / "ds" / "scene_0000"


def test_segment_and_discover(dataset, tmp_path):
    assert main(["segment", str(dataset), "--out", str(tmp_path / "seg")]) == 0
    rows = io.read_jsonl(tmp_path / "seg" / "segments.jsonl")
    assert rows and all((tmp_path / "seg" / r["mask"]).exists() for r in rows)
    assert main(["discover", str(dataset), "--out", str(tmp_path / "d"), "--single-scale", "--no-physics"]) == 0
    assert (tmp_path / "d" / "tracks.jsonl").exists()


def test_eval_outputs(dataset, tmp_path):
    assert main(["eval", str(dataset), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert {"segmentation", "iou3d", "recall3d"} <= set(report)
    assert (tmp_path / "per_frame.csv").read_text().startswith("row,mean_iou")


def test_surprise_outputs(dataset, tmp_path):
    assert main(["surprise", str(dataset), "--oracle", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "surprise.csv").read_text().splitlines()
    assert lines[0] == "frame,surprise" and len(lines) == 7
    assert (tmp_path / "surprise.png").read_bytes()[:4] == b"\x89PNG"


def test_pair_exp(tmp_path):
    assert main(["gen", "--scenario", "pairs", "--n", "1", "--frames", "14", "--violation", "disappear",
                 "--out", str(tmp_path / "p")]) == 0
    assert main(["pair-exp", str(tmp_path / "p"), "--oracle", "--out", str(tmp_path / "r")]) == 0
    rep = json.loads((tmp_path / "r" / "report.json").read_text())
    assert rep["relative_accuracy"] == 1.0
    assert (tmp_path / "r" / "curves" / "disappear_0000.png").exists()


def test_eval_loss(dataset, tmp_path):
    comp = tmp_path / "comp"
    comp.mkdir()
    for fr in io.load_frames(dataset):
        ones = np.ones(fr.shape)
        np.savez(comp / f"components_{fr.index:04d}.npz", masks=ones[None], means=fr.image[None], decoded=ones[None])
    assert main(["eval-loss", str(dataset), str(comp), "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "losses.json").read_text())["frames"]
    assert (tmp_path / "o" / "losses.png").exists()


def test_exit_codes(dataset, tmp_path):
    assert main(["discover", str(tmp_path / "missing"), "--out", str(tmp_path)]) == 1
    bad = tmp_path / "bad.ini"
    bad.write_text("[pipeline]\nslots = 0\n")
    assert main(["discover", str(dataset), "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["discover", str(dataset), "--config", str(tmp_path / "none.ini"), "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_config_command(capsys):
    assert main(["config"]) == 0
    assert "[dynamics]" in capsys.readouterr().out
