import itertools
import json

import numpy as np
import pytest

import tarbm

SMALL = {
    "hidden": "6",
    "delay": "2",
    "static_epochs": "5",
    "ae_epochs": "3",
    "joint_epochs": "3",
    "crbm_epochs": "5",
    "batch_size": "10",
    "seed": "3",
}


def random_rbm(v, h, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(v, h)), rng.normal(size=v), rng.normal(size=h)


def brute_energy(w, b_v, b_h, v, h, kind):
    visible = 0.5 * np.sum((v - b_v) ** 2) if kind == "gaussian" else -b_v @ v
    return visible - b_h @ h - v @ w @ h


def test_energy_matches_direct_formula():
    w, b_v, b_h = random_rbm(4, 3, 0)
    v = np.array([0.3, -1.2, 2.0, 0.5])
    h = np.array([1.0, 0.0, 1.0])
    for kind in ("binary", "gaussian"):
        got = tarbm.rbm_energy(w, b_v, b_h, v, h, kind)
        assert got == pytest.approx(brute_energy(w, b_v, b_h, v, h, kind), rel=1e-12)


def test_free_energy_marginalizes_hiddens():
    w, b_v, b_h = random_rbm(3, 4, 1)
    v = np.array([1.0, 0.0, 1.0])
    terms = [-brute_energy(w, b_v, b_h, v, np.array(h), "binary") for h in itertools.product([0.0, 1.0], repeat=4)]
    expected = -np.logaddexp.reduce(terms)
    assert tarbm.free_energy(w, b_v, b_h, v) == pytest.approx(expected, rel=1e-12)


def test_exact_log_likelihood_by_enumeration():
    w, b_v, b_h = random_rbm(3, 2, 2)
    states = [np.array(s) for s in itertools.product([0.0, 1.0], repeat=3)]
    hiddens = [np.array(s) for s in itertools.product([0.0, 1.0], repeat=2)]
    unnorm = {tuple(v): np.logaddexp.reduce([-brute_energy(w, b_v, b_h, v, h, "binary") for h in hiddens]) for v in states}
    log_z = np.logaddexp.reduce(list(unnorm.values()))
    data = np.array([[1, 0, 1], [0, 0, 1], [1, 1, 1]], dtype=float)
    expected = sum(unnorm[tuple(row)] - log_z for row in data)
    assert tarbm.exact_log_likelihood(w, b_v, b_h, data) == pytest.approx(expected, rel=1e-10)


def test_shape_errors_become_value_errors():
    w, b_v, b_h = random_rbm(3, 2, 3)
    with pytest.raises(ValueError):
        tarbm.rbm_energy(w, b_v, b_h, np.zeros(4), np.zeros(2))
    with pytest.raises(ValueError):
        tarbm.synth("no_such_kind")


def test_synth_and_preprocessing():
    frames, boundaries = tarbm.synth("sinusoid_mixture", seed=4, settings={"synth_dims": "5", "synth_length": "300"})
    assert frames.shape == (300, 5)
    assert boundaries == [0]
    cn = tarbm.contrast_normalize(frames)
    np.testing.assert_allclose(cn.mean(axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(cn.std(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(tarbm.covariance(frames), np.cov(frames, rowvar=False, bias=True), atol=1e-12)

    rng = np.random.default_rng(5)
    mixed = rng.normal(size=(2000, 4)) @ rng.normal(size=(4, 4))
    white = tarbm.whiten(mixed, epsilon=1e-12)
    np.testing.assert_allclose(np.cov(white, rowvar=False, bias=True), np.eye(4), atol=1e-8)


@pytest.mark.parametrize("kind", ["rbm", "trbm", "tarbm", "crbm"])
def test_train_is_deterministic_and_round_trips(kind, tmp_path):
    frames, boundaries = tarbm.synth("sinusoid_mixture", seed=1, settings={"synth_dims": "4", "synth_length": "120"})
    a = tarbm.train(frames, boundaries, kind, SMALL)
    b = tarbm.train(frames, boundaries, kind, SMALL)
    assert a.kind == kind
    assert (a.visible, a.hidden) == (4, 6)
    assert a.to_bytes() == b.to_bytes()
    assert a.to_bytes().startswith(b"TARBM1")
    path = tmp_path / "model.bin"
    a.save(path)
    assert tarbm.Model.load(path).to_bytes() == a.to_bytes()
    assert kind in repr(a)


def test_temporal_model_operations():
    frames, boundaries = tarbm.synth("sinusoid_mixture", seed=1, settings={"synth_dims": "4", "synth_length": "120"})
    model = tarbm.train(frames, boundaries, "tarbm", SMALL)
    assert model.stages == {"static": True, "ae": True, "joint": True}
    assert len(model.delayed) == 2 and model.delayed[0].shape == (6, 6)

    history = frames[[11, 10]]
    prediction = model.predict(history)
    assert prediction.shape == (1, 4)
    assert np.all(np.isfinite(prediction))
    rollout = model.generate(history, 5)
    assert rollout.shape == (5, 4)
    np.testing.assert_array_equal(rollout[:1], prediction)

    trace = tarbm.forward_projection(model, root=0, n=2)
    assert [len(level) for level in trace["levels"]] == [1, 2, 4]
    assert trace["levels"][0][0]["unit"] == 0
    assert sorted(tarbm.temporal_variation_rank(model)) == list(range(6))

    hidden = np.zeros((3, 6))
    assert tarbm.joint_energy(model, frames[:3], hidden) == pytest.approx(
        sum(tarbm.rbm_energy(model.w, model.b_v, model.b_h, frames[i], hidden[i], "gaussian") for i in range(3)),
        rel=1e-12,
    )

    grid = tarbm.filter_grid(model, patch_edge=2)
    assert grid.dtype == np.uint8
    # 6 tiles in 3 columns, 1-pixel separators.
    assert grid.shape == (2 * 2 + 1, 3 * 2 + 2)

    crbm = tarbm.train(frames, boundaries, "crbm", SMALL)
    assert crbm.predict(history).shape == (1, 4)
    with pytest.raises(ValueError):
        tarbm.forward_projection(crbm, 0)


def test_bench_report():
    settings = {
        "synth_kind": "sinusoid_mixture",
        "synth_dims": "3",
        "synth_length": "300",
        "hidden": "4",
        "delay": "2",
        "static_epochs": "3",
        "ae_epochs": "2",
        "joint_epochs": "2",
        "crbm_epochs": "3",
        "batch_size": "20",
        "train_count": "200",
        "test_snippets": "20",
        "repetitions": "2",
    }
    report = json.loads(tarbm.bench(settings, copy_last=True))
    text = json.dumps(report)
    for name in ("copy-last", "TRBM", "CRBM", "TARBM"):
        assert name in text
    assert tarbm.bench(settings) == tarbm.bench(settings)
