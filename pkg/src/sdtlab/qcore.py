"""Exact state algebra for superdense teleportation of ququart states.

Basis ordering for one photon (used everywhere in the package)::

    |0> = |H t1>,  |1> = |V t1>,  |2> = |H t2>,  |3> = |V t2>

Two-photon vectors are ordered Charles (first factor) then Bob, so index
``4*c + b`` labels ``|c>_C |b>_B``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatchError,
    UndefinedPhaseError,
    ValidationError,
)

TWO_PI = 2.0 * np.pi

BASIS_LABELS_4 = ("Ht1", "Vt1", "Ht2", "Vt2")
BASIS_LABELS_16 = tuple(f"{c}*{b}" for c, b in itertools.product(BASIS_LABELS_4, BASIS_LABELS_4))

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
COHERENCE_TOL = 1e-6


def default_labels(dim: int) -> tuple[str, ...]:
    if dim == 4:
        return BASIS_LABELS_4
    if dim == 16:
        return BASIS_LABELS_16
    return tuple(str(i) for i in range(dim))


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitude vector."""

    amplitudes: np.ndarray
    basis_labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        norm = np.sqrt(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state vector norm is {norm!r}, expected 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        labels = tuple(self.basis_labels) or default_labels(amps.size)
        if len(labels) != amps.size:
            raise DimensionMismatchError(
                f"{len(labels)} basis labels for a {amps.size}-dim vector"
            )
        object.__setattr__(self, "basis_labels", labels)

    @classmethod
    def normalized(cls, amplitudes, basis_labels=()) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(amps / norm, basis_labels)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()))

    def canonical(self) -> np.ndarray:
        """Amplitudes with the first nonzero entry made real-positive."""
        return canonical_global_phase(self.amplitudes)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"density matrix must be square, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValidationError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
        m = 0.5 * (m + m.conj().T)
        if np.linalg.eigvalsh(m).min() < -PSD_TOL:
            raise ValidationError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim, dtype=complex) / dim)


@dataclass(frozen=True)
class EquimodularPhases:
    """Three relative phases (radians), stored reduced to [0, 2*pi)."""

    phi1: float
    phi2: float
    phi3: float

    def __post_init__(self):
        for name in ("phi1", "phi2", "phi3"):
            object.__setattr__(self, name, wrap_2pi(getattr(self, name)))

    def as_array(self) -> np.ndarray:
        return np.array([self.phi1, self.phi2, self.phi3])

    @classmethod
    def from_degrees(cls, p1, p2, p3) -> "EquimodularPhases":
        return cls(*np.radians([p1, p2, p3]))


@dataclass(frozen=True)
class AliceOutcome:
    index: int

    def __post_init__(self):
        if self.index not in (1, 2, 3, 4):
            raise ValidationError(f"Alice outcome must be 1..4, got {self.index}")


ALICE_OUTCOMES = tuple(AliceOutcome(i) for i in range(1, 5))

StateLike = Union[StateVector, DensityOperator, np.ndarray]


def wrap_2pi(angle):
    """Reduce an angle (or array) to [0, 2*pi)."""
    out = np.mod(angle, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    return float(out) if np.ndim(out) == 0 else out


def wrap_pi(angle):
    """Reduce an angle (or array) to [-pi, pi)."""
    out = np.mod(np.asarray(angle) + np.pi, TWO_PI) - np.pi
    return float(out) if np.ndim(out) == 0 else out


def canonical_global_phase(amplitudes, tol: float = 1e-12) -> np.ndarray:
    amps = np.asarray(amplitudes, dtype=complex)
    nz = np.flatnonzero(np.abs(amps) > tol)
    if nz.size == 0:
        return amps.copy()
    ref = amps[nz[0]]
    return amps * (abs(ref) / ref)


def _phase_array(phases, d: int) -> np.ndarray:
    if isinstance(phases, EquimodularPhases):
        arr = phases.as_array()
    else:
        arr = np.asarray(phases, dtype=float).reshape(-1)
    if arr.size != d - 1:
        raise DimensionMismatchError(f"{arr.size} phases given for dimension {d}; need {d - 1}")
    return arr


def make_equimodular_ket(phases, d: int = 4) -> StateVector:
    """(|0> + e^{i phi_1}|1> + ... + e^{i phi_{d-1}}|d-1>) / sqrt(d)."""
    if d < 2:
        raise DimensionMismatchError("dimension must be at least 2")
    arr = _phase_array(phases, d)
    amps = np.exp(1j * np.concatenate([[0.0], arr])) / np.sqrt(d)
    return StateVector(amps)


def make_shared_entangled_state(d: int = 4) -> StateVector:
    """sum_i |ii> / sqrt(d) for d in {2, 4}."""
    if d not in (2, 4):
        raise ValidationError(f"unsupported dimension {d}; use 2 or 4")
    amps = np.zeros(d * d, dtype=complex)
    amps[[i * d + i for i in range(d)]] = 1.0 / np.sqrt(d)
    return StateVector(amps)


def encode_phases(joint: StateVector, phases) -> StateVector:
    """Charles' local diagonal phase encoding on the shared d=4 state."""
    if joint.dim != 16:
        raise DimensionMismatchError(f"expected the 16-dim joint state, got dim {joint.dim}")
    arr = _phase_array(phases, 4)
    local = np.exp(1j * np.concatenate([[0.0], arr]))
    op = np.kron(local, np.ones(4))
    return StateVector(joint.amplitudes * op, joint.basis_labels)


_ALICE_SIGNS = np.array(
    [
        [+1, +1, +1, -1],
        [+1, +1, -1, +1],
        [+1, -1, +1, +1],
        [-1, +1, +1, +1],
    ],
    dtype=float,
)


def alice_basis() -> tuple[StateVector, StateVector, StateVector, StateVector]:
    """Alice's four measurement states, mutually unbiased to the computational basis."""
    return tuple(StateVector(row / 2.0) for row in _ALICE_SIGNS)


def bob_conditional_amplitudes(outcome: AliceOutcome, phases) -> np.ndarray:
    """Unnormalized amplitudes of Bob's photon after Alice's outcome (norm 1/2)."""
    arr = _phase_array(phases, 4)
    terms = np.exp(1j * np.concatenate([[0.0], arr]))
    return _ALICE_SIGNS[outcome.index - 1] * terms / 4.0


def decompose_joint_state(phases) -> list[tuple[AliceOutcome, float, StateVector]]:
    """Split the encoded joint state over Alice's four outcomes.

    Returns ``(outcome, probability, bob_state)`` for each outcome. The
    decomposition is computed by projecting the encoded joint state, not by
    reading off the closed form, so it doubles as a check of that form.
    """
    joint = encode_phases(make_shared_entangled_state(4), phases).amplitudes.reshape(4, 4)
    out = []
    for outcome, a in zip(ALICE_OUTCOMES, alice_basis()):
        bob = a.amplitudes.conj() @ joint
        p = float(np.vdot(bob, bob).real)
        out.append((outcome, p, StateVector(bob / np.sqrt(p))))
    return out


def correction_unitary(outcome: AliceOutcome) -> np.ndarray:
    """Bob's diagonal correction: a pi phase on term (4 - outcome.index)."""
    diag = np.ones(4, dtype=complex)
    diag[4 - outcome.index] = -1.0
    return np.diag(diag)


def as_density(state: StateLike) -> DensityOperator:
    if isinstance(state, DensityOperator):
        return state
    if isinstance(state, StateVector):
        return state.density()
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return StateVector(arr).density()
    return DensityOperator(arr)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    # eigenvalues at rounding level are zeros; their square roots would be ~1e-8
    w = np.where(w > 64 * np.finfo(float).eps * max(w.max(), 0.0), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho: StateLike, sigma: StateLike) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2."""
    r = as_density(rho).matrix
    s = as_density(sigma).matrix
    if r.shape != s.shape:
        raise DimensionMismatchError(f"dimensions differ: {r.shape} vs {s.shape}")
    return _fidelity_matrices(r, s)


def _fidelity_matrices(r: np.ndarray, s: np.ndarray) -> float:
    # nuclear norm of sqrt(r) sqrt(s); stable when either operand is rank deficient
    sv = np.linalg.svd(_psd_sqrt(r) @ _psd_sqrt(s), compute_uv=False)
    f = float(np.sum(sv) ** 2)
    return min(max(f, 0.0), 1.0)


def abs_fidelity(rho_measured: StateLike, target: StateLike) -> float:
    """Fidelity of the entrywise modulus |rho| with the target.

    Non-standard metric: discarding the phases of every matrix element is
    only meaningful for targets with real non-negative amplitudes. ``|rho|``
    is renormalized to unit trace; negative eigenvalues of the product are
    clipped.
    """
    r = np.abs(as_density(rho_measured).matrix).astype(complex)
    r /= np.trace(r).real
    s = as_density(target).matrix
    return _fidelity_matrices(r, s)


def purity(rho: StateLike) -> float:
    m = as_density(rho).matrix
    return float(np.real(np.trace(m @ m)))


def partial_trace(rho: StateLike, keep: int, dims=(4, 4)) -> np.ndarray:
    """Reduced matrix of subsystem ``keep`` (0 or 1) of a bipartite operator."""
    m = as_density(rho).matrix.reshape(dims[0], dims[1], dims[0], dims[1])
    if keep == 0:
        return np.einsum("ijkj->ik", m)
    return np.einsum("ijil->jl", m)


def extract_phases(rho: StateLike) -> EquimodularPhases:
    """Relative phases arg(rho[i, 0]) of terms 1..3 against term 0."""
    m = as_density(rho).matrix
    if m.shape != (4, 4):
        raise DimensionMismatchError(f"phase extraction needs a 4-dim operator, got {m.shape}")
    coh = m[1:, 0]
    if np.any(np.abs(coh) <= COHERENCE_TOL):
        raise UndefinedPhaseError("vanishing coherence with term 0; phase undefined")
    return EquimodularPhases(*np.angle(coh))


def phase_error_stats(deltas: Sequence[float]) -> tuple[float, float]:
    """Circular mean and circular standard deviation, in degrees.

    ``deltas`` are in radians. The std is sqrt(-2 ln R) with R the mean
    resultant length.
    """
    arr = np.asarray(deltas, dtype=float).reshape(-1)
    if arr.size == 0:
        raise ValidationError("phase_error_stats needs at least one angle")
    z = np.mean(np.exp(1j * arr))
    r = min(abs(z), 1.0)
    mean = np.degrees(np.angle(z)) if r > 0 else 0.0
    std = np.degrees(np.sqrt(-2.0 * np.log(r))) if r > 0 else np.inf
    if abs(mean) < 1e-12:
        mean = 0.0
    return float(mean), float(std)


def states_equal_up_to_phase(a, b, tol: float = 1e-10) -> bool:
    av = a.amplitudes if isinstance(a, StateVector) else np.asarray(a, dtype=complex)
    bv = b.amplitudes if isinstance(b, StateVector) else np.asarray(b, dtype=complex)
    return bool(np.allclose(canonical_global_phase(av), canonical_global_phase(bv), atol=tol))
