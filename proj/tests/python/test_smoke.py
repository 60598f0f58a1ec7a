"""Smoke tests for the python bindings against the C++ core."""

import os
import subprocess

import numpy as np
import pytest

import pbpa


def test_pair_enumeration():
    pairs = pbpa.enumerate_pairs(10)
    assert len(pairs) == 45
    assert pairs[0] == (0, 1)
    assert pairs[-1] == (8, 9)
    assert pbpa.pair_name(pbpa.pair_index(2, 5)) == "l.knee-r.wrist"
    assert len(pbpa.part_names()) == 10


def test_union_and_projection():
    assert pbpa.union_box((0, 0, 2, 2), (4, 4, 2, 2)) == (0, 0, 6, 6)
    assert pbpa.project_to_feature((4, 4, 4, 4), 4, 16, 16) == (1, 1, 1, 1)
    assert pbpa.project_to_feature((100, 100, 4, 4), 4, 16, 16) is None


def test_pairwise_pooling_worked_example():
    fmap = np.arange(1, 17, dtype=np.float64).reshape(1, 4, 4)
    data, argmax = pbpa.roi_pairwise_pool(fmap, (0, 0, 2, 2), (2, 2, 2, 2), 2, 2)
    assert data.shape == (1, 2, 2)
    assert data[0, 0, 0] == 6.0
    assert data[0, 0, 1] == 0.0
    assert data[0, 1, 0] == 0.0
    assert data[0, 1, 1] == 16.0
    assert argmax[1] == -1 and argmax[2] == -1


def test_roi_max_pool_matches_numpy():
    rng = np.random.default_rng(3)
    fmap = rng.uniform(-1, 1, size=(2, 6, 6))
    data, _ = pbpa.roi_max_pool(fmap, (1, 2, 4, 3), 1, 1)
    expected = fmap[:, 1:5, 2:5].max(axis=(1, 2))
    np.testing.assert_array_equal(data.reshape(2), expected)


def test_select_top_k():
    assert pbpa.select_top_k([0.9, 0.1, 0.5], 2) == [0, 2]
    assert pbpa.select_top_k([0.5, 0.5, 0.1], 1) == [0]
    with pytest.raises(ValueError):
        pbpa.select_top_k([0.5], 0)


def test_generate_and_train_smoke(tmp_path):
    gen = pbpa.GenConfig()
    gen.canvas = 32
    gen.classes = 4
    scene = pbpa.generate_scene(5, gen)
    assert scene.image.shape == (3, 32, 32)
    assert len(scene.labels) == 4

    path = str(tmp_path / "smoke.pbpd")
    ds = pbpa.generate_dataset(100, 8, gen, path)
    assert ds.num_scenes == 8
    header = pbpa.read_dataset(path)
    assert header["num_scenes"] == 8
    assert header["digest"] == gen.digest()

    cfg = pbpa.ModelConfig()
    cfg.canvas = 32
    cfg.classes = 4
    cfg.k = 10
    cfg.branch_width = 8
    cfg.head_width = 4
    cfg.steps = 4
    cfg.batch = 2
    model = pbpa.Model(cfg, 7)
    losses = [model.train_step(ds, [0, 1], step) for step in range(4)]
    assert all(np.isfinite(losses))

    pred = model.predict(scene)
    assert len(pred["image_scores"]) == 4
    assert all(0.0 <= s <= 1.0 for s in pred["image_scores"])
    assert len(pred["persons"][0]["phi"]) == 10

    ckpt = str(tmp_path / "smoke.pbpa")
    model.save(ckpt, gen.digest(), 4)
    again = pbpa.Model(cfg, 99)
    digest, step = again.load(ckpt)
    assert digest == gen.digest()
    assert step == 4
    np.testing.assert_array_equal(again.predict(scene)["image_scores"], pred["image_scores"])


def test_cli_binary_available():
    cli = os.environ.get("PBPA_CLI")
    if not cli or not os.path.exists(cli):
        pytest.skip("PBPA_CLI not set")
    out = subprocess.run([cli, "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "gradcheck" in out.stdout
