"""Imperfect hyperentangled source and apparatus models."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import ValidationError
from ..optics import (
    INTERF_P1,
    INTERF_P2,
    BHFO,
    TomographySetting,
    jones_hwp,
    jones_qwp,
    polarizer_matrix,
)
from ..qcore import alice_basis, make_shared_entangled_state


@dataclass(frozen=True)
class SourceModel:
    """Source-side imperfections, applied in this order:

    white-noise admixture -> per-term amplitude reweighting -> time-bin
    dephasing. ``polarizer_extinction`` is the intensity extinction ratio of
    the analyzer's polarizing beamsplitter (inf = perfect) and acts on the
    measurement side. ``background_rate`` is accidental coincidences per
    second per detector pair.
    """

    pure_state_fraction: float = 1.0
    term_amplitude_imbalance: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    time_bin_qubit_purity: float = 1.0
    polarizer_extinction: float = float("inf")
    background_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.pure_state_fraction <= 1.0:
            raise ValidationError("pure_state_fraction must lie in [0, 1]")
        w = np.asarray(self.term_amplitude_imbalance, dtype=float)
        if w.size != 4 or (w <= 0).any():
            raise ValidationError("term weights must be four positive numbers")
        object.__setattr__(self, "term_amplitude_imbalance", tuple(float(x) for x in w))
        if not 0.5 <= self.time_bin_qubit_purity <= 1.0:
            raise ValidationError("time_bin_qubit_purity must lie in [0.5, 1]")
        if self.polarizer_extinction < 1.0:
            raise ValidationError("polarizer_extinction must be >= 1")
        if self.background_rate < 0:
            raise ValidationError("background_rate must be non-negative")

    @classmethod
    def ideal(cls) -> "SourceModel":
        return cls()


def _time_bin(i: int) -> int:
    return i // 2


def source_density(source: SourceModel) -> np.ndarray:
    """16x16 joint (Charles x Bob) density before phase encoding."""
    psi = make_shared_entangled_state(4).amplitudes
    rho = np.outer(psi, psi.conj())
    p = source.pure_state_fraction
    rho = p * rho + (1 - p) * np.eye(16) / 16

    w = np.asarray(source.term_amplitude_imbalance)
    w = w / w.mean()
    k = np.kron(np.sqrt(w), np.ones(4))
    rho = (k[:, None] * rho) * k[None, :]
    rho /= np.trace(rho).real

    # coherence factor v gives qubit purity (1 + v^2) / 2
    v = np.sqrt(max(2 * source.time_bin_qubit_purity - 1, 0.0))
    tb = np.array([_time_bin(b) for _ in range(4) for b in range(4)])
    rho = np.where(tb[:, None] == tb[None, :], rho, v * rho)
    return rho


def encode_density(rho_joint: np.ndarray, phases: Sequence[float]) -> np.ndarray:
    """Charles' diagonal phases on the first factor."""
    u = np.kron(np.exp(1j * np.concatenate([[0.0], np.asarray(phases, float)])), np.ones(4))
    return (u[:, None] * rho_joint) * u.conj()[None, :]


def bob_conditionals(rho_joint: np.ndarray, confusion: Optional[np.ndarray] = None) -> np.ndarray:
    """Unnormalized Bob states for each reported Alice outcome, shape (4, 4, 4).

    Tr of entry a is the probability that Alice reports outcome a+1.
    ``confusion[true, reported]`` mixes outcomes (identity by default).
    """
    r = rho_joint.reshape(4, 4, 4, 4)
    out = []
    for a in alice_basis():
        v = a.amplitudes
        out.append(np.einsum("i,ibjd,j->bd", v.conj(), r, v))
    cond = np.array(out)
    if confusion is not None:
        cond = np.einsum("tr,tbd->rbd", np.asarray(confusion, float), cond)
    return cond


def polarizer_leak_amplitude(visibility: float) -> float:
    """Blocked/passed field amplitude ratio for a polarizer of visibility V.

    The leaked/passed intensity ratio is (1 - V)/(1 + V).
    """
    if not 0.0 < visibility <= 1.0:
        raise ValidationError("visibility must lie in (0, 1]")
    return float(np.sqrt((1 - visibility) / (1 + visibility)))


def apparatus_operators(
    setting: TomographySetting,
    *,
    polarizer_visibility: float = 1.0,
    pbs_extinction: float = float("inf"),
) -> np.ndarray:
    """Bob's four detector operators as realized by an imperfect apparatus.

    The removable polarizer leaks on its blocked axis; the interferometer
    PBS routes a fraction 1/extinction of each port's light from the other
    port's paths (incoherently).
    """
    pol = polarizer_matrix(setting.t_h, setting.t_v)
    if setting.uses_polarizer and polarizer_visibility < 1.0:
        # the catalog diagonal cannot express partial leakage; use a leaky
        # diagonal with the same pass amplitude instead
        d = np.diag(pol).copy()
        passed = np.abs(d).max()
        leak = passed * polarizer_leak_amplitude(polarizer_visibility)
        d = np.where(np.abs(d) < 1e-12, leak, d)
        pol = np.diag(d)

    def block(m):
        return np.kron(np.eye(2), m)

    front = (
        pol
        @ block(jones_hwp(setting.alpha1))
        @ block(jones_qwp(setting.beta1))
        @ BHFO
    )
    tail2 = jones_qwp(setting.beta2) @ jones_hwp(setting.alpha2)
    tail3 = jones_qwp(setting.beta3) @ jones_hwp(setting.alpha3)
    right = [front @ INTERF_P1 @ tail2, front @ INTERF_P2 @ tail3]
    wrong = [front @ INTERF_P2 @ tail2, front @ INTERF_P1 @ tail3]
    eps = 0.0 if np.isinf(pbs_extinction) else 1.0 / pbs_extinction
    ops = []
    for port in (0, 1):
        for e in (np.array([1, 0]), np.array([0, 1])):
            good = right[port] @ e
            bad = wrong[port] @ e
            ops.append((1 - eps) * np.outer(good, good.conj()) + eps * np.outer(bad, bad.conj()))
    return np.array(ops)
