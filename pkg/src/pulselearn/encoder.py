"""Data-to-control interface: a perceptron layer squashed to bounded pulses.

A raw input vector (bias constant appended as its last entry) is mapped
through a trainable weight matrix to pre-activations z, then squashed to
drive amplitudes with |w| < bound. The squashing derivative has the
closed form (bound^2 - w^2) / (2 * bound), which the gradient chain rule
uses to push amplitude gradients back onto the weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NONLINEAR = "nonlinear"
LINEAR_CLIPPED = "linear-clipped"
MODES = (NONLINEAR, LINEAR_CLIPPED)


@dataclass
class EncoderParams:
    """Trainable interface parameters.

    ``weights`` is (n_code, input_dim) with the bias column merged as the
    last column. ``mode`` selects the nonlinear squashing (default) or the
    linear-clipped ablation variant.
    """

    weights: np.ndarray
    bound: float = 25.0
    mode: str = NONLINEAR

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 2:
            raise ValueError("weights must be a 2-D matrix")
        if self.bound <= 0:
            raise ValueError(f"bound must be positive, got {self.bound}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def n_code(self) -> int:
        return self.weights.shape[0]

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]


def init_encoder(
    n_code: int,
    input_dim: int,
    rng: np.random.Generator,
    bound: float = 25.0,
    mode: str = NONLINEAR,
) -> EncoderParams:
    """Gaussian init with std 1/sqrt(input_dim), bias column zero.

    Keeps initial pre-activations O(1) so the squashing starts far from
    saturation, where gradients vanish.
    """
    w = rng.normal(0.0, 1.0 / np.sqrt(input_dim), size=(n_code, input_dim))
    if n_code:
        w[:, -1] = 0.0
    return EncoderParams(weights=w, bound=bound, mode=mode)


def encode(params: EncoderParams, x: np.ndarray) -> np.ndarray:
    """Map one input vector to encoding amplitudes (MHz).

    Nonlinear mode: bound * (e^z - 1)/(e^z + 1), evaluated as
    bound * tanh(z/2) which is the same function without overflow.
    Linear-clipped mode: clamp(z, -bound, bound).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (params.input_dim,):
        raise ValueError(
            f"input has shape {x.shape}, encoder expects ({params.input_dim},)"
        )
    z = params.weights @ x
    if params.mode == NONLINEAR:
        return params.bound * np.tanh(0.5 * z)
    return np.clip(z, -params.bound, params.bound)


def saturation_factor(w_code, bound: float):
    """Derivative of the nonlinear squashing, expressed in the output w.

    Returns (bound^2 - w^2) / (2 * bound); zero exactly at |w| = bound,
    which is where weight gradients vanish. Accepts scalars or arrays.
    """
    w = np.asarray(w_code, dtype=float)
    if np.any(np.abs(w) > bound):
        raise ValueError(f"amplitude exceeds bound {bound}: max |w| = {np.abs(w).max()}")
    out = (bound * bound - w * w) / (2.0 * bound)
    return out if out.ndim else float(out)


def clip_subgradient(w_code, bound: float):
    """Subgradient of the linear-clipped map: 1 inside the bound, 0 at it.

    The clipped output sits at +-bound exactly when the pre-activation
    left the box, so the indicator can be read off the output alone.
    """
    w = np.asarray(w_code, dtype=float)
    out = (np.abs(w) < bound).astype(float)
    return out if out.ndim else float(out)
