import numpy as np
import pytest

from physdisc import io, simkit
from physdisc.core import Cuboid, ObjectTrack, TrackState


def test_mask_round_trip(tmp_path):
    m = np.zeros((7, 9))
    m[2:5, 3:8] = 1
    io.save_mask(tmp_path / "m.png", m)
    np.testing.assert_array_equal(io.load_mask(tmp_path / "m.png"), m)


def test_frame_round_trip(tmp_path, rng):
    img = np.rint(rng.uniform(size=(6, 5, 3)) * 255) / 255
    io.save_frame(tmp_path / "frame_0003.png", img)
    fr = io.load_frame(tmp_path / "frame_0003.png", 3)
    np.testing.assert_allclose(fr.image, img, atol=1e-12)
    assert io.list_frames(tmp_path)[0][0] == 3


def test_missing_inputs(tmp_path):
    with pytest.raises(io.DatasetError):
        io.list_frames(tmp_path)
    with pytest.raises(io.DatasetError):
        io.list_frames(tmp_path / "nope")
    with pytest.raises(io.DatasetError):
        io.read_json(tmp_path / "none.json")
    (tmp_path / "bad.png").write_text("not an image")
    with pytest.raises(io.DatasetError):
        io.load_mask(tmp_path / "bad.png")


def test_tracks_round_trip(tmp_path):
    m = np.zeros((4, 4)); m[1:3, 1:3] = 1
    t = ObjectTrack("t0", [TrackState(f, Cuboid((f, 1, 5), (1, 2, 1), (0, 0.1, 0)), m) for f in range(3)])
    path = io.write_tracks(tmp_path, [t], "tracks.jsonl", "obj")
    back = io.read_tracks(path)
    assert len(back) == 1 and back[0].frames == [0, 1, 2]
    assert back[0].states[2].cuboid == t.states[2].cuboid


def test_scene_round_trip(tmp_path):
    rec = simkit.generate(simkit.SceneConfig(seed=3, frames=4, occluders=1))
    d = io.write_scene(tmp_path / "scene_a", rec, alpha=60.0)
    assert len(io.load_gt(d)) == len(rec.gt_tracks)
    assert len(io.load_gt(d, include_occluders=True)) == len(rec.all_tracks)
    assert io.read_json(d / "meta.json")["alpha"] == 60.0
    assert io.load_camera(d / "camera.json").to_json() == rec.camera.to_json()
    assert io.scene_dirs(tmp_path) == [d]
