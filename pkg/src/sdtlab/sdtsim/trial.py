"""One superdense-teleportation trial: encode, measure, reconstruct, correct."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import UndefinedPhaseError, ValidationError
from ..optics import TomographySetting, settings_for_36
from ..qcore import (
    ALICE_OUTCOMES,
    DensityOperator,
    correction_unitary,
    extract_phases,
    fidelity,
    make_equimodular_ket,
    phase_error_stats,
    purity,
    wrap_pi,
)
from ..tomo.bme import SamplerConfig, fit_bme
from ..tomo.mle import fit_mle
from ..tomo.model import EfficiencyCalibration, conditional_model
from .counts import expected_coincidences, pair_rate_for_level, records_from_counts
from .encoder import LCEncoder, realized_phases, target_phases
from .source import SourceModel


@dataclass(frozen=True)
class TrialConfig:
    """Acquisition and analysis settings for one trial.

    ``counts_per_tomography`` is the expected total coincidences per
    conditional (one Alice outcome) 36-setting tomography; ``pair_rate``
    overrides it when given. ``bob_phase`` is a per-setting phase (or
    sample of phases) on Bob's late time bin.
    """

    settings: Optional[tuple[TomographySetting, ...]] = None
    duration: float = 1.0
    counts_per_tomography: float = 4000.0
    pair_rate: Optional[float] = None
    estimator: str = "mle"
    mle_starts: int = 2
    sampler: Optional[SamplerConfig] = None
    lc_jitter_deg: float = 0.0
    efficiency_mismatch: float = 0.0
    polarizer_visibility: float = 1.0
    alice_confusion: Optional[np.ndarray] = None
    calib: EfficiencyCalibration = field(default_factory=EfficiencyCalibration.ideal)
    elapsed_hours: float = 0.0
    noiseless: bool = False
    bob_phase: Optional[tuple] = None

    def __post_init__(self):
        if self.estimator not in ("mle", "bme"):
            raise ValidationError(f"unknown estimator {self.estimator!r}")
        if self.duration <= 0 or self.counts_per_tomography <= 0:
            raise ValidationError("duration and count level must be positive")
        if self.pair_rate is not None and self.pair_rate <= 0:
            raise ValidationError("pair_rate must be positive")
        if self.lc_jitter_deg < 0 or self.efficiency_mismatch < 0:
            raise ValidationError("noise levels must be non-negative")

    def catalog(self) -> list[TomographySetting]:
        return list(self.settings) if self.settings is not None else settings_for_36()


@dataclass(frozen=True)
class OutcomeResult:
    outcome: int
    rho: DensityOperator
    fidelity: float
    delta_phases: np.ndarray
    probability: float
    total_counts: float
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class TrialResult:
    target: tuple[float, float, float]
    outcomes: tuple[OutcomeResult, ...]
    seed: int

    def __post_init__(self):
        if len(self.outcomes) != 4:
            raise ValidationError("a trial has exactly four outcome entries")

    @property
    def mean_fidelity(self) -> float:
        return float(np.mean([o.fidelity for o in self.outcomes]))

    @property
    def mean_purity(self) -> float:
        return float(np.mean([purity(o.rho) for o in self.outcomes]))

    def deltas(self) -> np.ndarray:
        """Delta-phi in radians, shape (4 outcomes, 3 phases)."""
        return np.array([o.delta_phases for o in self.outcomes])

    def phase_stats(self) -> tuple[float, float]:
        """Circular mean and std (degrees) pooled over outcomes and phases."""
        d = self.deltas().ravel()
        d = d[np.isfinite(d)]
        if d.size == 0:
            return float("nan"), float("nan")
        return phase_error_stats(d)


def _delta_phases(rho: DensityOperator, target: np.ndarray) -> np.ndarray:
    try:
        measured = extract_phases(rho).as_array()
    except UndefinedPhaseError:
        return np.full(3, np.nan)
    return np.asarray(wrap_pi(measured - target), dtype=float)


def reconstruct_outcomes(
    counts: np.ndarray,
    target,
    config: TrialConfig,
    seed: int,
) -> tuple[OutcomeResult, ...]:
    """Per-outcome reconstruction and analysis-side correction.

    ``counts`` is the (S, 4, 4) data array (float means when noiseless).
    """
    settings = config.catalog()
    records = records_from_counts(np.zeros_like(counts, dtype=np.int64), settings, config.duration)
    target_ket = make_equimodular_ket(target)
    target_arr = np.asarray(target.as_array())
    grand = counts.sum()
    results = []
    for outcome in ALICE_OUTCOMES:
        a = outcome.index
        model, _ = conditional_model(records, settings, config.calib, a)
        data = counts[:, a - 1, :].reshape(-1).astype(float)
        if config.estimator == "bme":
            sampler = config.sampler or SamplerConfig(seed=seed)
            res = fit_bme(model, data, sampler)
        else:
            res = fit_mle(model, data, n_starts=config.mle_starts, seed=seed)
        u = correction_unitary(outcome)
        rho = DensityOperator(u @ res.rho.matrix @ u.conj().T)
        results.append(
            OutcomeResult(
                outcome=a,
                rho=rho,
                fidelity=fidelity(rho, target_ket),
                delta_phases=_delta_phases(rho, target_arr),
                probability=float(counts[:, a - 1, :].sum() / grand) if grand > 0 else float("nan"),
                total_counts=float(data.sum()),
                warnings=res.warnings,
            )
        )
    return tuple(results)


def simulate_trial_counts(
    enc: LCEncoder,
    source: SourceModel,
    config: TrialConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """(mean, drawn) coincidence arrays for one trial; draws use ``rng``."""
    settings = config.catalog()
    jitter = np.radians(config.lc_jitter_deg) * rng.standard_normal(3)
    phases = realized_phases(enc, jitter, config.elapsed_hours)
    eff = None
    if config.efficiency_mismatch > 0:
        eff = np.clip(1.0 + config.efficiency_mismatch * rng.standard_normal((len(settings), 4)), 0.05, None)
    rate = config.pair_rate or pair_rate_for_level(config.counts_per_tomography, settings, config.duration)
    mean = expected_coincidences(
        phases, source, settings, rate, config.calib,
        duration=config.duration,
        polarizer_visibility=config.polarizer_visibility,
        confusion=config.alice_confusion,
        efficiency_factors=eff,
        bob_phase=config.bob_phase,
    )
    drawn = mean if config.noiseless else rng.poisson(mean).astype(float)
    return mean, drawn


def run_sdt_trial(
    enc: LCEncoder,
    source: Optional[SourceModel] = None,
    config: Optional[TrialConfig] = None,
    seed: int = 0,
) -> TrialResult:
    """Simulate, reconstruct all four conditional states and score them
    against the target set by ``enc``. Deterministic in ``seed``."""
    source = source or SourceModel()
    config = config or TrialConfig()
    rng = np.random.default_rng(seed)
    _, drawn = simulate_trial_counts(enc, source, config, rng)
    target = target_phases(enc)
    outcomes = reconstruct_outcomes(drawn, target, config, seed)
    return TrialResult(tuple(float(x) for x in target.as_array()), outcomes, seed)
