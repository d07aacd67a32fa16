"""Model assembly: schedules, readout, loss, checkpoints."""

import numpy as np
import pytest

import pulselearn as pl
from pulselearn import model as model_mod
from pulselearn.encoder import EncoderParams
from pulselearn.model import (
    CLASS_DIGITS,
    ModelConfig,
    ModelParams,
    assemble_schedule,
    empirical_loss,
    forward,
    init_params,
    load_checkpoint,
    predict,
    save_checkpoint,
)
from pulselearn.qsim import chain_spec


def zeroed_params(cfg, input_dim):
    enc = EncoderParams(weights=np.zeros((cfg.n_encode_controls, input_dim)))
    return ModelParams(encoder=enc, infer_pulses=np.zeros((cfg.infer_periods, cfg.spec.n_controls)))


def test_class_digit_set():
    assert CLASS_DIGITS == (0, 2, 3, 4, 5, 6, 8, 9)


def test_config_counts(chain3_cfg):
    assert chain3_cfg.n_encode_controls == 60
    assert chain3_cfg.n_infer_controls == 60
    assert chain3_cfg.infer_periods == 10
    assert chain3_cfg.spec.dim == 8


def test_config_validation():
    spec = chain_spec(2)
    with pytest.raises(ValueError):
        ModelConfig(spec=spec, encode_periods=5, total_periods=4)
    with pytest.raises(ValueError):
        ModelConfig(spec=spec, encode_periods=1, total_periods=4, n_readout=3)
    with pytest.raises(ValueError):
        ModelConfig(spec=spec, encode_periods=1, total_periods=4, n_readout=2, n_classes=5)
    with pytest.raises(ValueError):
        ModelConfig(spec=spec, encode_periods=1, total_periods=4, dt=0.0)


def test_schedule_layout(tiny_cfg, rng):
    # Encoding amplitudes fill period-major; inference rows follow.
    params = init_params(tiny_cfg, 5, rng)
    x = np.array([0.3, 0.7, 0.2, 0.9, 1.0])
    sched = assemble_schedule(tiny_cfg, params, x)
    assert sched.amplitudes.shape == (5, 4)
    w_code = pl.encode(params.encoder, x)
    assert np.allclose(sched.amplitudes[:2].reshape(-1), w_code)
    assert np.allclose(sched.amplitudes[2:], params.infer_pulses)
    assert sched.dt == tiny_cfg.dt


def test_forward_is_probability_vector(tiny_cfg, rng):
    params = init_params(tiny_cfg, 5, rng)
    probs = forward(tiny_cfg, params, np.array([0.1, 0.5, 0.9, 0.0, 1.0]))
    assert probs.shape == (4,)
    assert np.all(probs >= 0)
    assert probs.sum() == pytest.approx(1.0, abs=1e-9)


def test_zero_params_reads_class_zero(tiny_cfg):
    params = zeroed_params(tiny_cfg, 5)
    probs = forward(tiny_cfg, params, np.array([0.4, 0.2, 0.6, 0.8, 1.0]))
    assert probs[0] == pytest.approx(1.0, abs=1e-12)


def test_predict_tie_breaks_to_lowest_index():
    # Uncoupled pair, pi/4 X pulse on qubit 1 only: P(00) = P(10) = 1/2,
    # classes 0 and 2 tie exactly and argmax must pick 0.
    cfg = ModelConfig(
        spec=chain_spec(2, couplings=(0.0,)),
        encode_periods=0,
        total_periods=1,
        n_readout=2,
        n_classes=4,
    )
    params = zeroed_params(cfg, 3)
    params.infer_pulses[0, 0] = 25.0
    probs = forward(cfg, params, np.array([0.0, 0.0, 1.0]))
    assert probs[0] == pytest.approx(probs[2], abs=1e-12)
    assert probs[0] == pytest.approx(0.5, abs=1e-12)
    assert predict(cfg, params, np.array([0.0, 0.0, 1.0])) == 0


def test_empirical_loss_oracle(tiny_cfg):
    # Zeroed model puts all mass on class 0: loss = 1 - mean([1, 0]).
    params = zeroed_params(tiny_cfg, 5)
    xs = np.array([[0.1, 0.2, 0.3, 0.4, 1.0], [0.5, 0.5, 0.5, 0.5, 1.0]])
    loss = empirical_loss(tiny_cfg, params, xs, np.array([0, 1]))
    assert loss == pytest.approx(0.5, abs=1e-12)


def test_empirical_loss_validates(tiny_cfg):
    params = zeroed_params(tiny_cfg, 5)
    xs = np.ones((2, 5))
    with pytest.raises(ValueError):
        empirical_loss(tiny_cfg, params, xs, np.array([0, 4]))
    with pytest.raises(ValueError):
        empirical_loss(tiny_cfg, params, xs, np.array([0]))


def test_eval_counter_tracks_forwards(tiny_cfg, rng):
    params = init_params(tiny_cfg, 5, rng)
    model_mod.forward_evals.reset()
    for _ in range(3):
        forward(tiny_cfg, params, np.array([0.1, 0.2, 0.3, 0.4, 1.0]))
    assert model_mod.forward_evals.count == 3


def test_shot_sampling(tiny_cfg, rng):
    import dataclasses

    noisy_cfg = dataclasses.replace(tiny_cfg, shots=100000)
    params = init_params(tiny_cfg, 5, rng)
    x = np.array([0.2, 0.4, 0.6, 0.8, 1.0])
    exact = forward(tiny_cfg, params, x)
    sampled = forward(noisy_cfg, params, x, rng=np.random.default_rng(5))
    assert sampled.sum() == pytest.approx(1.0)
    assert np.max(np.abs(sampled - exact)) < 0.01
    with pytest.raises(ValueError):
        forward(noisy_cfg, params, x)  # shots need an rng


def test_init_params_seed_and_bounds(chain3_cfg):
    a = init_params(chain3_cfg, 785, 7)
    b = init_params(chain3_cfg, 785, 7)
    assert np.array_equal(a.encoder.weights, b.encoder.weights)
    assert np.array_equal(a.infer_pulses, b.infer_pulses)
    assert a.infer_pulses.shape == (10, 6)
    assert np.max(np.abs(a.infer_pulses)) <= 2.5  # bound/10 at init
    c = init_params(chain3_cfg, 785, 8)
    assert not np.array_equal(a.encoder.weights, c.encoder.weights)


def test_checkpoint_round_trip(tmp_path, tiny_cfg, rng):
    params = init_params(tiny_cfg, 5, rng)
    path = tmp_path / "ck.npz"
    save_checkpoint(path, tiny_cfg, params, {"note": "fixture", "epoch": 3})
    cfg2, params2, meta = load_checkpoint(path)
    assert cfg2 == tiny_cfg
    assert np.array_equal(params2.encoder.weights, params.encoder.weights)
    assert np.array_equal(params2.infer_pulses, params.infer_pulses)
    assert params2.encoder.bound == params.encoder.bound
    assert params2.encoder.mode == params.encoder.mode
    assert meta["note"] == "fixture"
    assert meta["epoch"] == 3

    x = np.array([0.3, 0.1, 0.7, 0.2, 1.0])
    assert np.array_equal(forward(tiny_cfg, params, x), forward(cfg2, params2, x))


def test_checkpoint_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.npz"
    np.savez(bad, nonsense=np.arange(3))
    with pytest.raises((KeyError, ValueError)):
        load_checkpoint(bad)


def test_params_copy_is_deep(tiny_cfg, rng):
    params = init_params(tiny_cfg, 5, rng)
    clone = params.copy()
    clone.infer_pulses[0, 0] += 1.0
    clone.encoder.weights[0, 0] += 1.0
    assert params.infer_pulses[0, 0] != clone.infer_pulses[0, 0]
    assert params.encoder.weights[0, 0] != clone.encoder.weights[0, 0]
