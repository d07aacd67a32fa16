"""Full classifier: schedule assembly, quantum forward pass, loss, readout.

The first ``encode_periods`` rows of a schedule come from the
data-to-control interface (sample dependent), the rest are directly
trained inference pulses shared across samples. Class probabilities are
the z-basis readout of the first qubits, and the empirical loss is one
minus the mean true-class probability.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass

import numpy as np

from .encoder import EncoderParams, NONLINEAR, encode, init_encoder
from .qsim import (
    ControlSchedule,
    HamiltonianSpec,
    evolve,
    initial_state,
    povm_probabilities,
)

# MNIST digits assigned to readout outcomes 000..111, in ascending order.
CLASS_DIGITS = (0, 2, 3, 4, 5, 6, 8, 9)

CHECKPOINT_FORMAT = "pulselearn-checkpoint-v1"


class EvalCounter:
    """Thread-safe count of quantum forward evaluations.

    One bump per full schedule evolution plus readout; finite-difference
    gradients are budgeted in these units.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.count = 0

    def bump(self):
        with self._lock:
            self.count += 1

    def reset(self):
        with self._lock:
            self.count = 0


forward_evals = EvalCounter()


@dataclass(frozen=True)
class ModelConfig:
    """Architecture of one classifier: chain, depth split, readout."""

    spec: HamiltonianSpec
    encode_periods: int
    total_periods: int
    dt: float = 5.0  # ns
    n_readout: int = 3
    n_classes: int = 8
    class_digits: tuple[int, ...] = CLASS_DIGITS
    shots: int = 0  # 0 = exact probabilities

    def __post_init__(self):
        if self.total_periods < 1:
            raise ValueError("total_periods must be >= 1")
        if not 0 <= self.encode_periods <= self.total_periods:
            raise ValueError(
                f"encode_periods must lie in [0, {self.total_periods}], "
                f"got {self.encode_periods}"
            )
        if not 1 <= self.n_readout <= self.spec.n_qubits:
            raise ValueError(
                f"n_readout={self.n_readout} out of range for "
                f"{self.spec.n_qubits} qubits"
            )
        if not 1 <= self.n_classes <= 2 ** self.n_readout:
            raise ValueError(
                f"n_classes={self.n_classes} exceeds the {2 ** self.n_readout} "
                "readout outcomes"
            )
        if self.shots < 0:
            raise ValueError("shots must be >= 0")

    @property
    def infer_periods(self) -> int:
        return self.total_periods - self.encode_periods

    @property
    def n_encode_controls(self) -> int:
        return self.spec.n_controls * self.encode_periods

    @property
    def n_infer_controls(self) -> int:
        return self.spec.n_controls * self.infer_periods


@dataclass
class ModelParams:
    """Everything trainable: encoder weights plus inference pulse table."""

    encoder: EncoderParams
    infer_pulses: np.ndarray  # (infer_periods, n_controls) MHz

    def __post_init__(self):
        self.infer_pulses = np.asarray(self.infer_pulses, dtype=float)
        if self.infer_pulses.ndim != 2:
            raise ValueError("infer_pulses must be a (periods, channels) matrix")

    def copy(self) -> "ModelParams":
        return ModelParams(
            encoder=EncoderParams(
                weights=self.encoder.weights.copy(),
                bound=self.encoder.bound,
                mode=self.encoder.mode,
            ),
            infer_pulses=self.infer_pulses.copy(),
        )


def init_params(
    cfg: ModelConfig,
    input_dim: int,
    seed_or_rng,
    bound: float = 25.0,
    mode: str = NONLINEAR,
) -> ModelParams:
    """Fresh parameters: Gaussian encoder weights, small random pulses.

    Inference pulses start uniform in [-bound/10, bound/10], nonzero to
    break symmetry but far from the bound.
    """
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    enc = init_encoder(cfg.n_encode_controls, input_dim, rng, bound=bound, mode=mode)
    pulses = rng.uniform(
        -bound / 10.0, bound / 10.0, size=(cfg.infer_periods, cfg.spec.n_controls)
    )
    return ModelParams(encoder=enc, infer_pulses=pulses)


def assemble_schedule(
    cfg: ModelConfig,
    params: ModelParams,
    x: np.ndarray,
    noise_trace: np.ndarray | None = None,
) -> ControlSchedule:
    """Resolve one sample into a full pulse table.

    Encoding amplitudes fill the first rows period-major (period 1's
    channels first), inference pulses the rest.
    """
    if params.infer_pulses.shape != (cfg.infer_periods, cfg.spec.n_controls):
        raise ValueError(
            f"infer_pulses shape {params.infer_pulses.shape} does not match "
            f"({cfg.infer_periods}, {cfg.spec.n_controls})"
        )
    amps = np.empty((cfg.total_periods, cfg.spec.n_controls))
    if cfg.encode_periods:
        code = encode(params.encoder, x)
        amps[: cfg.encode_periods] = code.reshape(cfg.encode_periods, cfg.spec.n_controls)
    amps[cfg.encode_periods :] = params.infer_pulses
    return ControlSchedule(amplitudes=amps, dt=cfg.dt, noise_offsets=noise_trace)


def schedule_probabilities(cfg: ModelConfig, schedule: ControlSchedule) -> np.ndarray:
    """One quantum forward evaluation: evolve |0...0> and read out.

    Returns the first ``n_classes`` outcome probabilities. Counted by
    ``forward_evals``.
    """
    forward_evals.bump()
    psi = evolve(initial_state(cfg.spec.n_qubits), schedule, cfg.spec)
    return povm_probabilities(psi, cfg.n_readout)[: cfg.n_classes]


def forward(
    cfg: ModelConfig,
    params: ModelParams,
    x: np.ndarray,
    noise_trace: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Class probabilities for one input.

    Deterministic given (cfg, params, x, noise_trace) when shots == 0.
    With shots > 0 the probabilities become multinomial frequency
    estimates over the readout outcomes, drawn from `rng` (a
    hardware-realism option, off by default). Outcomes outside the class
    set land in a discard bucket but still consume shots.
    """
    probs = schedule_probabilities(cfg, assemble_schedule(cfg, params, x, noise_trace))
    if cfg.shots:
        if rng is None:
            raise ValueError("shots > 0 requires an rng")
        full = np.append(np.clip(probs, 0.0, 1.0), max(0.0, 1.0 - probs.sum()))
        counts = rng.multinomial(cfg.shots, full / full.sum())
        probs = counts[: cfg.n_classes] / cfg.shots
    return probs


def empirical_loss(
    cfg: ModelConfig,
    params: ModelParams,
    inputs: np.ndarray,
    labels: np.ndarray,
    noise_traces=None,
) -> float:
    """One minus the mean true-class probability over the batch."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    labels = np.atleast_1d(np.asarray(labels))
    if inputs.shape[0] == 0:
        raise ValueError("empty batch")
    if inputs.shape[0] != labels.shape[0]:
        raise ValueError("inputs and labels disagree on batch size")
    if np.any(labels < 0) or np.any(labels >= cfg.n_classes):
        raise ValueError(f"labels must lie in 0..{cfg.n_classes - 1}")
    total = 0.0
    for k in range(inputs.shape[0]):
        trace = None if noise_traces is None else noise_traces[k]
        total += forward(cfg, params, inputs[k], trace)[labels[k]]
    return 1.0 - total / inputs.shape[0]


def predict(
    cfg: ModelConfig,
    params: ModelParams,
    x: np.ndarray,
    noise_trace: np.ndarray | None = None,
) -> int:
    """Most probable class; ties resolve to the lowest index."""
    return int(np.argmax(forward(cfg, params, x, noise_trace)))


def _config_to_dict(cfg: ModelConfig) -> dict:
    return {
        "n_qubits": cfg.spec.n_qubits,
        "couplings": list(cfg.spec.couplings),
        "channels_per_qubit": cfg.spec.channels_per_qubit,
        "frequency_convention": cfg.spec.frequency_convention,
        "encode_periods": cfg.encode_periods,
        "total_periods": cfg.total_periods,
        "dt": cfg.dt,
        "n_readout": cfg.n_readout,
        "n_classes": cfg.n_classes,
        "class_digits": list(cfg.class_digits),
        "shots": cfg.shots,
        "encoder_bound": None,  # filled by save_checkpoint
        "encoder_mode": None,
    }


def config_from_dict(d: dict) -> ModelConfig:
    spec = HamiltonianSpec(
        n_qubits=int(d["n_qubits"]),
        couplings=tuple(d["couplings"]),
        channels_per_qubit=int(d["channels_per_qubit"]),
        frequency_convention=d["frequency_convention"],
    )
    return ModelConfig(
        spec=spec,
        encode_periods=int(d["encode_periods"]),
        total_periods=int(d["total_periods"]),
        dt=float(d["dt"]),
        n_readout=int(d["n_readout"]),
        n_classes=int(d["n_classes"]),
        class_digits=tuple(d["class_digits"]),
        shots=int(d["shots"]),
    )


def save_checkpoint(path, cfg: ModelConfig, params: ModelParams, metadata: dict | None = None):
    """Write config + parameters + metadata to one .npz file.

    Arrays are stored raw (float64), config and metadata as JSON, so a
    save/load round trip is bit exact.
    """
    cfg_dict = _config_to_dict(cfg)
    cfg_dict["encoder_bound"] = params.encoder.bound
    cfg_dict["encoder_mode"] = params.encoder.mode
    np.savez(
        path,
        format=np.array(CHECKPOINT_FORMAT),
        config_json=np.array(json.dumps(cfg_dict)),
        encoder_weights=params.encoder.weights,
        infer_pulses=params.infer_pulses,
        metadata_json=np.array(json.dumps(metadata or {})),
    )


def load_checkpoint(path):
    """Inverse of save_checkpoint: returns (cfg, params, metadata)."""
    with np.load(path) as archive:
        fmt = str(archive["format"])
        if fmt != CHECKPOINT_FORMAT:
            raise ValueError(f"unrecognized checkpoint format {fmt!r}")
        cfg_dict = json.loads(str(archive["config_json"]))
        cfg = config_from_dict(cfg_dict)
        params = ModelParams(
            encoder=EncoderParams(
                weights=archive["encoder_weights"],
                bound=float(cfg_dict["encoder_bound"]),
                mode=cfg_dict["encoder_mode"],
            ),
            infer_pulses=archive["infer_pulses"],
        )
        metadata = json.loads(str(archive["metadata_json"]))
    return cfg, params, metadata
