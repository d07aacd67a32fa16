"""Pulse-level machine learning on simulated qubit chains.

A classifier here is a physics experiment: a perceptron layer turns the
input vector into microwave pulse amplitudes, a coupled qubit chain
evolves under them plus a trained inference pulse sequence, and the
class call is a z-basis readout of the first qubits. This package
simulates that loop end to end and trains it with either
finite-difference or exact propagator gradients.
"""

from .data import DIGITS, Dataset, load_idx, prepare, subset, synthetic_dataset, write_idx
from .encoder import (
    LINEAR_CLIPPED,
    NONLINEAR,
    EncoderParams,
    clip_subgradient,
    encode,
    init_encoder,
    saturation_factor,
)
from .evaluate import (
    ConfusionMatrix,
    ablation_suite,
    evaluate,
    noise_sweep,
    sweep_to_csv,
)
from .gradients import (
    ANALYTIC,
    CENTRAL_DIFFERENCE,
    FORWARD_DIFFERENCE,
    GradientBundle,
    loss_and_grad,
    prob_grad,
)
from .model import (
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
from .noise import NoiseSpec, noisy_error_rate, sample_trace
from .qsim import (
    ControlSchedule,
    HamiltonianSpec,
    build_controls,
    build_drift,
    chain_spec,
    evolve,
    initial_state,
    povm_probabilities,
    step_propagator,
)
from .training import (
    Adam,
    SGD,
    TrainConfig,
    TrainingDiverged,
    TrainReport,
    measurement_budget,
    naive_measurement_budget,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ANALYTIC",
    "Adam",
    "CENTRAL_DIFFERENCE",
    "CLASS_DIGITS",
    "ConfusionMatrix",
    "ControlSchedule",
    "DIGITS",
    "Dataset",
    "EncoderParams",
    "FORWARD_DIFFERENCE",
    "GradientBundle",
    "HamiltonianSpec",
    "LINEAR_CLIPPED",
    "ModelConfig",
    "ModelParams",
    "NONLINEAR",
    "NoiseSpec",
    "SGD",
    "TrainConfig",
    "TrainReport",
    "TrainingDiverged",
    "ablation_suite",
    "assemble_schedule",
    "build_controls",
    "build_drift",
    "chain_spec",
    "clip_subgradient",
    "empirical_loss",
    "encode",
    "evaluate",
    "evolve",
    "forward",
    "init_encoder",
    "init_params",
    "initial_state",
    "load_checkpoint",
    "load_idx",
    "loss_and_grad",
    "measurement_budget",
    "naive_measurement_budget",
    "noise_sweep",
    "sweep_to_csv",
    "noisy_error_rate",
    "povm_probabilities",
    "predict",
    "prepare",
    "prob_grad",
    "sample_trace",
    "save_checkpoint",
    "step_propagator",
    "subset",
    "synthetic_dataset",
    "train",
    "write_idx",
]
