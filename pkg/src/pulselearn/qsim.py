"""Dense state-vector simulator for a driven chain of qubits.

The system is a nearest-neighbour ZZ-coupled chain in which every qubit
carries two drive channels (x and y). Pulses are piecewise constant: a
schedule holds one amplitude per channel per sampling period, and the
state is advanced period by period with the exact propagator of the
frozen Hamiltonian.

Conventions (tests rely on these, do not change casually):

* Amplitudes and couplings are ordinary frequencies in MHz. They enter
  the Hamiltonian multiplied by 2*pi, with time converted to
  microseconds. A 25 MHz x-drive held for 5 ns therefore rotates by
  2*pi * 0.125 = pi/4 rad and takes |0> to an equal superposition,
  P(|1>) = sin^2(pi/4) = 1/2.
* sigma_z |0> = +|0>.
* Qubit 1 is the most significant bit of the basis index, so for three
  qubits the basis state |011> has index 3.
* Propagators are computed by Hermitian eigendecomposition, which is
  exact to machine precision at these dimensions and matches the exact
  propagator derivatives used elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

# Internal unit system: energies in rad/us, time in us.
NS_TO_US = 1.0e-3

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# Neighbour couplings (MHz) of the reference chain, pairs (1,2), (2,3), ...
DEFAULT_COUPLINGS_MHZ = (1.5, 2.0, 2.5, 3.0)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Static description of the chain: sizes, couplings, drive channels.

    ``couplings[i]`` is the ZZ coupling between qubits i+1 and i+2 in MHz.
    ``frequency_convention`` records how raw MHz numbers become Hamiltonian
    coefficients; it is informational and fixed.
    """

    n_qubits: int
    couplings: tuple[float, ...]
    channels_per_qubit: int = 2
    frequency_convention: str = "2pi-mhz-ns"

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if len(self.couplings) != self.n_qubits - 1:
            raise ValueError(
                f"need {self.n_qubits - 1} couplings for {self.n_qubits} qubits, "
                f"got {len(self.couplings)}"
            )
        if self.channels_per_qubit != 2:
            raise ValueError("only x/y drives are supported (2 channels per qubit)")

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    @property
    def n_controls(self) -> int:
        """Number of independent control channels (x and y per qubit)."""
        return self.channels_per_qubit * self.n_qubits


def chain_spec(n_qubits: int, couplings=None) -> HamiltonianSpec:
    """Spec for an n-qubit chain; defaults to the reference coupling ladder."""
    if couplings is None:
        if n_qubits - 1 > len(DEFAULT_COUPLINGS_MHZ):
            raise ValueError(
                f"no default couplings beyond {len(DEFAULT_COUPLINGS_MHZ) + 1} qubits; "
                "pass them explicitly"
            )
        couplings = DEFAULT_COUPLINGS_MHZ[: n_qubits - 1]
    return HamiltonianSpec(n_qubits=n_qubits, couplings=tuple(float(g) for g in couplings))


@dataclass
class ControlSchedule:
    """Fully resolved pulse table for one evolution.

    ``amplitudes`` has one row per sampling period and one column per
    control channel, ordered (q1 x, q1 y, q2 x, q2 y, ...), in MHz.
    ``noise_offsets`` optionally adds a sigma_z term per qubit per period
    (MHz, unbounded).
    """

    amplitudes: np.ndarray
    dt: float = 5.0  # ns
    noise_offsets: np.ndarray | None = None

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if self.amplitudes.ndim != 2:
            raise ValueError("amplitudes must be a (periods, channels) matrix")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.noise_offsets is not None:
            self.noise_offsets = np.asarray(self.noise_offsets, dtype=float)
            if self.noise_offsets.shape[0] != self.amplitudes.shape[0]:
                raise ValueError(
                    f"noise_offsets has {self.noise_offsets.shape[0]} rows, "
                    f"schedule has {self.amplitudes.shape[0]} periods"
                )

    @property
    def periods(self) -> int:
        return self.amplitudes.shape[0]


def initial_state(n_qubits: int) -> np.ndarray:
    """The all-zeros basis state |00...0>."""
    psi = np.zeros(2 ** n_qubits, dtype=complex)
    psi[0] = 1.0
    return psi


def z_signs(n_qubits: int, qubit: int) -> np.ndarray:
    """Diagonal of sigma_z on `qubit` (0-based), embedded in the full register.

    Entry s is +1 when the qubit's bit in basis index s is 0, else -1.
    Qubit 0 sits at the most significant bit.
    """
    if not 0 <= qubit < n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {n_qubits} qubits")
    bit = n_qubits - 1 - qubit
    idx = np.arange(2 ** n_qubits)
    return 1.0 - 2.0 * ((idx >> bit) & 1)


def embed_single_qubit(op: np.ndarray, n_qubits: int, qubit: int) -> np.ndarray:
    """Tensor a 2x2 operator onto `qubit` (0-based), identities elsewhere."""
    left = np.eye(2 ** qubit, dtype=complex)
    right = np.eye(2 ** (n_qubits - qubit - 1), dtype=complex)
    return np.kron(np.kron(left, op), right)


def build_drift(spec: HamiltonianSpec) -> np.ndarray:
    """Always-on part of the Hamiltonian: 2*pi * sum_i g_i Z_i Z_{i+1}.

    Diagonal and real; the all-zeros state has diagonal entry
    2*pi * sum(g).
    """
    diag = np.zeros(spec.dim)
    for i, g in enumerate(spec.couplings):
        diag += TWO_PI * g * z_signs(spec.n_qubits, i) * z_signs(spec.n_qubits, i + 1)
    return np.diag(diag).astype(complex)


def build_controls(spec: HamiltonianSpec) -> list[np.ndarray]:
    """Control operators, ordered (X_1, Y_1, X_2, Y_2, ...).

    Each is 2*pi times the embedded Pauli, so a unit MHz amplitude
    contributes 2*pi rad/us.
    """
    ops = []
    for q in range(spec.n_qubits):
        ops.append(TWO_PI * embed_single_qubit(SIGMA_X, spec.n_qubits, q))
        ops.append(TWO_PI * embed_single_qubit(SIGMA_Y, spec.n_qubits, q))
    return ops


def hamiltonian_terms(spec: HamiltonianSpec):
    """Drift matrix, stacked control operators, and per-qubit Z diagonals.

    Convenience bundle for code that assembles many per-period
    Hamiltonians (evolution and propagator derivatives share it).
    """
    drift = build_drift(spec)
    controls = np.stack(build_controls(spec))
    zdiags = np.stack([z_signs(spec.n_qubits, q) for q in range(spec.n_qubits)])
    return drift, controls, zdiags


def period_hamiltonian(drift, controls, zdiags, amps_row, noise_row=None) -> np.ndarray:
    """Hamiltonian frozen over one sampling period (zero-order hold)."""
    h = drift + np.tensordot(amps_row, controls, axes=1)
    if noise_row is not None:
        h = h + np.diag(TWO_PI * (noise_row @ zdiags)).astype(complex)
    return h


def step_propagator(h_total: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i * H * dt) for Hermitian H via eigendecomposition; dt in ns."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    try:
        evals, evecs = np.linalg.eigh(h_total)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - should not happen
        raise np.linalg.LinAlgError(
            f"eigendecomposition failed for {h_total.shape} Hamiltonian: {exc}"
        ) from exc
    phases = np.exp(-1.0j * evals * (dt * NS_TO_US))
    return (evecs * phases) @ evecs.conj().T


def evolve(
    state: np.ndarray,
    schedule: ControlSchedule,
    spec: HamiltonianSpec,
    return_trajectory: bool = False,
):
    """Propagate `state` through all periods of `schedule`.

    Period k applies exp(-i * H_k * dt) with H_k the drift plus that
    period's control (and noise) terms. With ``return_trajectory`` the
    result is ``(final, traj)`` where ``traj[k]`` is the state after k
    periods (row 0 is the input state).
    """
    if schedule.amplitudes.shape[1] != spec.n_controls:
        raise ValueError(
            f"schedule has {schedule.amplitudes.shape[1]} channels, "
            f"spec defines {spec.n_controls}"
        )
    if schedule.noise_offsets is not None and schedule.noise_offsets.shape[1] != spec.n_qubits:
        raise ValueError(
            f"noise_offsets has {schedule.noise_offsets.shape[1]} columns, "
            f"expected {spec.n_qubits}"
        )
    drift, controls, zdiags = hamiltonian_terms(spec)
    psi = np.asarray(state, dtype=complex)
    traj = np.empty((schedule.periods + 1, psi.size), dtype=complex) if return_trajectory else None
    if traj is not None:
        traj[0] = psi
    for k in range(schedule.periods):
        noise_row = None if schedule.noise_offsets is None else schedule.noise_offsets[k]
        h = period_hamiltonian(drift, controls, zdiags, schedule.amplitudes[k], noise_row)
        psi = step_propagator(h, schedule.dt) @ psi
        if traj is not None:
            traj[k + 1] = psi
    if return_trajectory:
        return psi, traj
    return psi


def povm_probabilities(state: np.ndarray, n_readout: int = 3) -> np.ndarray:
    """Outcome probabilities of a z-basis readout of the first qubits.

    Entry j is the total weight of basis states whose first ``n_readout``
    bits spell j; trailing qubits are traced out.
    """
    state = np.asarray(state)
    dim = state.shape[0]
    n_qubits = int(np.log2(dim))
    if 2 ** n_qubits != dim:
        raise ValueError(f"state length {dim} is not a power of two")
    if not 1 <= n_readout <= n_qubits:
        raise ValueError(f"n_readout={n_readout} out of range for {n_qubits} qubits")
    weights = np.abs(state) ** 2
    return weights.reshape(2 ** n_readout, -1).sum(axis=1)
