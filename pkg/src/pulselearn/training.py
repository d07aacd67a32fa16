"""Mini-batch stochastic gradient training of the pulse classifier.

One epoch is a full seeded-shuffle pass over the training set split into
mini-batches. Each iteration evaluates the batch loss gradient (each
sample with its own fresh noise trace when training with noise), takes
an optimizer step, and projects the inference pulses back into the
amplitude bound. Everything is driven by one root seed: shuffling,
parameter init, and noise streams, so a rerun reproduces the exact same
numbers regardless of worker count.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import model as model_mod
from .data import Dataset
from .evaluate import evaluate
from .gradients import ANALYTIC, FORWARD_DIFFERENCE, loss_and_grad
from .model import ModelConfig, ModelParams, init_params, save_checkpoint


class SGD:
    def __init__(self, lr=1e-3):
        self.lr = lr

    def step(self, params_list, grads_list):
        for p, g in zip(params_list, grads_list):
            p -= self.lr * g


class Adam:
    def __init__(self, shapes, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, params_list, grads_list):
        self.t += 1
        for i, (p, g) in enumerate(zip(params_list, grads_list)):
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            m_hat = self.m[i] / (1 - self.beta1 ** self.t)
            v_hat = self.v[i] / (1 - self.beta2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainConfig:
    """Optimization hyper-parameters and ablation switches."""

    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"  # or "sgd"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 5
    method: str = ANALYTIC  # gradient route: "analytic" or a finite-difference scheme
    fd_step: float = 0.01  # MHz perturbation for finite differences
    noise_level: float = 0.0  # MHz; 0 trains clean
    seed: int = 0
    smoothing_window: int = 100
    freeze_encoder: bool = False  # keep the weight matrix at its random init
    freeze_infer: bool = False
    encoder_mode: str = "nonlinear"
    bound: float = 25.0
    workers: int = 1
    checkpoint_dir: str | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainReport:
    """Everything a run produced besides the parameters themselves."""

    raw_loss: list = field(default_factory=list)
    smoothed_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_error: list = field(default_factory=list)
    iterations: int = 0
    epochs_run: int = 0
    grad_evals: int = 0
    wall_clock: float = 0.0
    final_params: ModelParams | None = None


class TrainingDiverged(RuntimeError):
    """Raised when a loss or gradient turns non-finite mid-run."""

    def __init__(self, message, params, report):
        super().__init__(message)
        self.params = params
        self.report = report


def measurement_budget(cfg: ModelConfig) -> int:
    """Forward evaluations per sample for a finite-difference gradient.

    One per control variable plus the unperturbed baseline. This is the
    count the chain rule buys: weight gradients ride on the encoding
    amplitude gradients instead of needing their own perturbations.
    """
    return cfg.n_encode_controls + cfg.n_infer_controls + 1


def naive_measurement_budget(cfg: ModelConfig, input_dim: int) -> int:
    """Evaluation count if every weight entry were perturbed directly.

    ``input_dim`` is the length of the model input vector (bias entry
    included). Grows with the data dimensionality, unlike the chained
    protocol above.
    """
    return (input_dim + 1) * cfg.n_encode_controls + cfg.n_infer_controls + 1


def train(
    cfg: ModelConfig,
    tcfg: TrainConfig,
    train_set: Dataset,
    val_set: Dataset | None = None,
    initial_params: ModelParams | None = None,
):
    """Run the full mini-batch loop; returns (params, report).

    ``initial_params`` overrides the seeded fresh init (used by ablations
    that warm-start from a previous run).
    """
    if len(train_set.labels) == 0:
        raise ValueError("empty training set")
    if np.any(train_set.labels < 0) or np.any(train_set.labels >= cfg.n_classes):
        raise ValueError(f"training labels must lie in 0..{cfg.n_classes - 1}")

    seed_seq = np.random.SeedSequence(tcfg.seed)
    init_ss, shuffle_ss, noise_ss = seed_seq.spawn(3)
    if initial_params is None:
        params = init_params(
            cfg,
            train_set.inputs.shape[1],
            np.random.default_rng(init_ss),
            bound=tcfg.bound,
            mode=tcfg.encoder_mode,
        )
    else:
        params = initial_params.copy()
    if not (
        np.all(np.isfinite(params.encoder.weights))
        and np.all(np.isfinite(params.infer_pulses))
    ):
        raise ValueError("initial parameters contain non-finite values")
    shuffle_rng = np.random.default_rng(shuffle_ss)
    noise_rng = np.random.default_rng(noise_ss)

    blocks = [params.encoder.weights, params.infer_pulses]
    if tcfg.optimizer == "adam":
        opt = Adam(
            [b.shape for b in blocks],
            lr=tcfg.learning_rate,
            beta1=tcfg.beta1,
            beta2=tcfg.beta2,
            eps=tcfg.adam_eps,
        )
    else:
        opt = SGD(lr=tcfg.learning_rate)

    report = TrainReport()
    window = []
    z = len(train_set.labels)
    bound = params.encoder.bound
    ckpt_dir = Path(tcfg.checkpoint_dir) if tcfg.checkpoint_dir else None
    if ckpt_dir:
        ckpt_dir.mkdir(parents=True, exist_ok=True)
    last_finite = params.copy()
    started = time.perf_counter()

    for epoch in range(tcfg.epochs):
        order = shuffle_rng.permutation(z)
        for start in range(0, z, tcfg.batch_size):
            idx = order[start : start + tcfg.batch_size]
            xs = train_set.inputs[idx]
            ys = train_set.labels[idx]
            traces = None
            if tcfg.noise_level > 0:
                traces = [
                    tcfg.noise_level
                    * noise_rng.standard_normal((cfg.total_periods, cfg.spec.n_qubits))
                    for _ in range(len(idx))
                ]
            def abort(reason):
                report.wall_clock = time.perf_counter() - started
                report.final_params = last_finite
                if ckpt_dir:
                    save_checkpoint(
                        ckpt_dir / "abort.npz",
                        cfg,
                        last_finite,
                        {"reason": reason, "iteration": report.iterations},
                    )
                raise TrainingDiverged(
                    f"{reason} at iteration {report.iterations}", last_finite, report
                )

            evals_before = model_mod.forward_evals.count
            try:
                loss, grad = loss_and_grad(
                    cfg,
                    params,
                    xs,
                    ys,
                    method=tcfg.method,
                    delta=tcfg.fd_step,
                    noise_traces=traces,
                    workers=tcfg.workers,
                )
            except np.linalg.LinAlgError as exc:
                # non-finite parameters surface here, inside eigh
                abort(f"non-finite Hamiltonian ({exc})")
            report.grad_evals += model_mod.forward_evals.count - evals_before

            if not (
                np.isfinite(loss)
                and np.all(np.isfinite(grad.d_weights))
                and np.all(np.isfinite(grad.d_infer_pulses))
            ):
                abort(f"non-finite loss or gradient (loss={loss})")

            grads = [grad.d_weights, grad.d_infer_pulses]
            if tcfg.freeze_encoder:
                grads[0] = np.zeros_like(grads[0])
            if tcfg.freeze_infer:
                grads[1] = np.zeros_like(grads[1])
            opt.step(blocks, grads)
            np.clip(params.infer_pulses, -bound, bound, out=params.infer_pulses)

            last_finite = params.copy()
            report.raw_loss.append(float(loss))
            window.append(float(loss))
            if len(window) > tcfg.smoothing_window:
                window.pop(0)
            report.smoothed_loss.append(float(np.mean(window)))
            report.iterations += 1

        report.epochs_run = epoch + 1
        if val_set is not None and len(val_set.labels):
            vloss, verror, _ = evaluate(cfg, params, val_set, workers=tcfg.workers)
            report.val_loss.append(vloss)
            report.val_error.append(verror)
        if ckpt_dir:
            save_checkpoint(
                ckpt_dir / f"epoch_{epoch + 1:03d}.npz",
                cfg,
                params,
                {"epoch": epoch + 1, "iterations": report.iterations},
            )

    report.wall_clock = time.perf_counter() - started
    report.final_params = params
    return params, report
