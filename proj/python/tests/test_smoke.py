import json
import os

import numpy as np
import pytest

import _pmstrnn as pm

MICRO_CONFIG = json.dumps(
    {
        "architecture": {
            "input_size": 36,
            "layers": [
                {"tau": 2.0, "num_fm": 2, "fm_size": 12, "num_cm": 1, "cm_size": 6},
                {"tau": 4.0, "num_fm": 2, "fm_size": 6, "num_cm": 1, "cm_size": 3},
            ],
        },
        "training": {"learning_rate": 0.005, "max_epochs": 2, "eval_every": 2, "seed": 5},
        "dataset": {
            "steps_per_cycle": 17,
            "sequences": [
                {"label": "P1", "primitive": "P1", "cycles": 1, "subject": 0},
                {"label": "P5", "primitive": "P5", "cycles": 1, "subject": 0},
            ],
        },
    }
)


def test_default_config_is_json():
    cfg = json.loads(pm.default_config())
    assert cfg["architecture"]["layers"]
    assert cfg["training"]["learning_rate"] > 0


def test_render_sequence_shape_and_range():
    frames = pm.render_sequence(MICRO_CONFIG, "P1")
    assert frames.shape == (17, 36, 36)
    assert frames.min() >= -1.0
    assert frames.max() <= 1.0
    # something is actually drawn
    assert (frames > 0).any()


def test_render_unknown_label():
    with pytest.raises(ValueError):
        pm.render_sequence(MICRO_CONFIG, "nope")


def test_train_generate_and_persistence(tmp_path):
    model = pm.train(MICRO_CONFIG)
    assert model.labels == ["P1", "P5"]
    assert model.epochs_run == 2
    assert len(model.log()) == 2

    frames = pm.render_sequence(MICRO_CONFIG, "P1")
    preds = model.generate(frames, "P1", "closed", 5)
    assert preds.shape == (5, 36, 36)
    assert np.isfinite(preds).all()

    path = os.fspath(tmp_path / "model.ckpt")
    model.save(path)
    again = pm.Model.load(path)
    assert again.labels == model.labels
    d0 = model.closed_mse(frames, "P1")
    d1 = again.closed_mse(frames, "P1")
    assert d0 == d1

    cfg = pm.RegressionConfig()
    cfg.window = 4
    cfg.iters_per_step = 2
    rec = again.recognize(frames[:6], "P1", cfg)
    assert len(rec["prediction_error"]) == 5
    ent = again.entrain(frames[:6], "P1")
    assert len(ent["prediction_error"]) == 5


def test_analysis_helpers():
    t = np.linspace(0, 4 * np.pi, 64)
    rows = np.stack([np.sin(t), np.cos(t), 0.5 * np.sin(t)], axis=1)
    out = pm.pca(rows, 2)
    comps = out["components"]
    assert comps.shape == (2, 3)
    gram = comps @ comps.T
    assert np.allclose(gram, np.eye(2), atol=1e-9)
    assert out["explained"][0] >= out["explained"][1]

    period = 16
    cyc = np.stack([np.sin(2 * np.pi * (np.arange(64) % period) / period),
                    np.cos(2 * np.pi * (np.arange(64) % period) / period)], axis=1)
    assert pm.cyclicity(cyc, period) > 0.99
    ramp = np.stack([np.arange(64.0), np.zeros(64)], axis=1)
    assert pm.cyclicity(ramp, period) < 0.15

    a = np.stack([np.cos(t), np.sin(t)], axis=1)
    assert pm.trajectory_distance(a, a) == 0.0

    with pytest.raises(ValueError):
        pm.pca(rows, 99)


def test_mse_and_gradcheck():
    x = np.zeros((2, 4, 4))
    y = np.ones((2, 4, 4))
    assert pm.mse(x, x) == 0.0
    assert pm.mse(x, y) == pytest.approx(1.0)

    rep = pm.gradcheck(trials=1, seed=3)
    assert rep["max_rel_err"] <= 1e-4
