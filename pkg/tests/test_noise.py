"""Flux-noise sampling and noisy evaluation."""

import numpy as np
import pytest

import pulselearn as pl
from pulselearn.encoder import EncoderParams
from pulselearn.model import ModelConfig, ModelParams, forward, init_params
from pulselearn.noise import (
    NoiseSpec,
    noisy_error_rate,
    noisy_loss,
    sample_trace,
    trace_stream,
)
from pulselearn.qsim import chain_spec


def test_trace_shape_and_statistics():
    rng = np.random.default_rng(0)
    traces = np.stack([sample_trace(rng, 20, 3, 2.5) for _ in range(2000)])
    assert traces.shape == (2000, 20, 3)
    # 120k pooled draws: mean and std land within 1% of (0, 2.5)
    assert abs(traces.mean()) < 0.01 * 2.5
    assert abs(traces.std() - 2.5) < 0.01 * 2.5


def test_zero_level_trace_is_zero():
    rng = np.random.default_rng(0)
    assert np.all(sample_trace(rng, 5, 2, 0.0) == 0.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(level=-0.1)


def test_rep_streams_are_independent_and_stable():
    spec = NoiseSpec(level=1.0, seed=3)
    a = trace_stream(spec, 0).standard_normal(8)
    a2 = trace_stream(spec, 0).standard_normal(8)
    b = trace_stream(spec, 1).standard_normal(8)
    assert np.array_equal(a, a2)
    assert not np.array_equal(a, b)


def test_zero_controls_state_is_noise_invariant(tiny_cfg):
    # Pure sigma_z noise cannot move |0...0> when nothing else drives.
    enc = EncoderParams(weights=np.zeros((tiny_cfg.n_encode_controls, 5)))
    params = ModelParams(
        encoder=enc,
        infer_pulses=np.zeros((tiny_cfg.infer_periods, tiny_cfg.spec.n_controls)),
    )
    x = np.array([0.3, 0.9, 0.4, 0.6, 1.0])
    rng = np.random.default_rng(11)
    for _ in range(5):
        trace = sample_trace(rng, tiny_cfg.total_periods, 2, 8.0)
        probs = forward(tiny_cfg, params, x, noise_trace=trace)
        assert probs[0] == pytest.approx(1.0, abs=1e-12)


def test_noise_moves_driven_state(tiny_cfg, rng):
    params = init_params(tiny_cfg, 5, rng)
    x = np.array([0.3, 0.9, 0.4, 0.6, 1.0])
    clean = forward(tiny_cfg, params, x)
    noisy = forward(
        tiny_cfg, params, x,
        noise_trace=sample_trace(np.random.default_rng(4), tiny_cfg.total_periods, 2, 5.0),
    )
    assert np.max(np.abs(noisy - clean)) > 1e-4


def test_zero_level_error_rate_collapses_to_single_rep(tiny_cfg, tiny_sets, rng):
    params = init_params(tiny_cfg, 9, rng)
    _, te = tiny_sets
    mean, se, errs = noisy_error_rate(
        tiny_cfg, params, te.inputs, te.labels, NoiseSpec(0.0, 5), reps=10
    )
    assert len(errs) == 1
    assert se == 0.0
    pred = np.array([pl.predict(tiny_cfg, params, x) for x in te.inputs])
    assert mean == pytest.approx(np.mean(pred != te.labels))


def test_noisy_error_rate_deterministic(tiny_cfg, tiny_sets, rng):
    params = init_params(tiny_cfg, 9, rng)
    _, te = tiny_sets
    spec = NoiseSpec(2.0, seed=9)
    m1, s1, e1 = noisy_error_rate(tiny_cfg, params, te.inputs, te.labels, spec, reps=3)
    m2, s2, e2 = noisy_error_rate(tiny_cfg, params, te.inputs, te.labels, spec, reps=3)
    assert m1 == m2 and s1 == s2
    assert np.array_equal(e1, e2)


def test_adding_reps_keeps_earlier_reps(tiny_cfg, tiny_sets, rng):
    params = init_params(tiny_cfg, 9, rng)
    _, te = tiny_sets
    spec = NoiseSpec(2.0, seed=9)
    _, _, e3 = noisy_error_rate(tiny_cfg, params, te.inputs, te.labels, spec, reps=3)
    _, _, e5 = noisy_error_rate(tiny_cfg, params, te.inputs, te.labels, spec, reps=5)
    assert np.array_equal(e3, e5[:3])


def test_noisy_loss_zero_level_equals_clean(tiny_cfg, tiny_sets, rng):
    params = init_params(tiny_cfg, 9, rng)
    tr, _ = tiny_sets
    clean = pl.empirical_loss(tiny_cfg, params, tr.inputs, tr.labels)
    assert noisy_loss(tiny_cfg, params, tr.inputs, tr.labels, NoiseSpec(0.0)) == clean


def test_reps_validation(tiny_cfg, tiny_sets, rng):
    params = init_params(tiny_cfg, 9, rng)
    _, te = tiny_sets
    with pytest.raises(ValueError):
        noisy_error_rate(tiny_cfg, params, te.inputs, te.labels, NoiseSpec(1.0), reps=0)
