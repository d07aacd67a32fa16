"""White flux noise on the qubit frequencies.

Each evolution period gets an independent Gaussian detuning per qubit
(standard deviation in MHz) entering the Hamiltonian on the sigma_z of
that qubit. Traces are sampled fresh per circuit run; robustness numbers
average the error rate over many independently-noised passes through
the test set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelConfig, ModelParams, empirical_loss, forward, predict


@dataclass(frozen=True)
class NoiseSpec:
    """Noise level (MHz std) plus the seed material for its streams."""

    level: float
    seed: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("noise level must be >= 0")


def sample_trace(rng, periods: int, n_qubits: int, level: float) -> np.ndarray:
    """One i.i.d. Gaussian offset per (period, qubit), in MHz."""
    return level * rng.standard_normal((periods, n_qubits))


def trace_stream(spec: NoiseSpec, rep: int):
    """Independent generator for repetition ``rep`` of a sweep.

    Seeded via SeedSequence spawn keys so reps never share a stream and
    adding reps never perturbs earlier ones.
    """
    return np.random.default_rng(np.random.SeedSequence((spec.seed, rep)))


def noisy_error_rate(
    cfg: ModelConfig,
    params: ModelParams,
    inputs: np.ndarray,
    labels: np.ndarray,
    spec: NoiseSpec,
    reps: int = 10,
):
    """Mean test error under noise, with its standard error over reps.

    Every sample in every rep draws a fresh trace. A zero noise level is
    deterministic, so it collapses to a single rep with SE 0. Returns
    ``(mean_error, standard_error, per_rep_errors)``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if spec.level == 0.0:
        pred = np.array(
            [predict(cfg, params, x) for x in inputs]
        )
        err = float(np.mean(pred != labels))
        return err, 0.0, np.array([err])

    errors = np.empty(reps)
    for rep in range(reps):
        rng = trace_stream(spec, rep)
        wrong = 0
        for x, y in zip(inputs, labels):
            trace = sample_trace(rng, cfg.total_periods, cfg.spec.n_qubits, spec.level)
            probs = forward(cfg, params, x, noise_trace=trace)
            if int(np.argmax(probs)) != y:
                wrong += 1
        errors[rep] = wrong / len(labels)
    mean = float(np.mean(errors))
    se = float(np.std(errors, ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0
    return mean, se, errors


def noisy_loss(
    cfg: ModelConfig,
    params: ModelParams,
    inputs: np.ndarray,
    labels: np.ndarray,
    spec: NoiseSpec,
    rep: int = 0,
):
    """Empirical loss of one noised pass (distinct traces per sample)."""
    if spec.level == 0.0:
        return empirical_loss(cfg, params, inputs, labels)
    rng = trace_stream(spec, rep)
    traces = [
        sample_trace(rng, cfg.total_periods, cfg.spec.n_qubits, spec.level)
        for _ in range(len(labels))
    ]
    return empirical_loss(cfg, params, inputs, labels, noise_traces=traces)
