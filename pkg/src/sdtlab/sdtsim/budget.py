"""Preset imperfection levels reproducing the laboratory fidelity budget."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .source import SourceModel
from .trial import TrialConfig


@dataclass(frozen=True)
class ErrorBudget:
    """Imperfection levels, each tied to one line of the fidelity budget.

    Levels were chosen so that each effect alone, on noiseless data, costs
    the fidelity listed next to it.
    """

    # ~1%: analyzer PBS extinction ratio
    pbs_extinction: float = 100.0
    # ~1%: LC basis/phase error, per-device Gaussian jitter
    lc_jitter_deg: float = 8.5
    # ~1%: uncalibrated per-(setting, detector) efficiency scatter
    efficiency_mismatch: float = 0.25
    # ~1%: time-bin qubit purity
    time_bin_qubit_purity: float = 0.98
    # ~2%: H/V and D/A visibility of the removable polarizer
    polarizer_visibility: float = 0.92
    source_extra: dict = field(default_factory=dict)

    def source(self) -> SourceModel:
        return SourceModel(
            polarizer_extinction=self.pbs_extinction,
            time_bin_qubit_purity=self.time_bin_qubit_purity,
            **self.source_extra,
        )

    def apply(self, config: TrialConfig) -> TrialConfig:
        return replace(
            config,
            lc_jitter_deg=self.lc_jitter_deg,
            efficiency_mismatch=self.efficiency_mismatch,
            polarizer_visibility=self.polarizer_visibility,
        )


def lab_error_budget() -> ErrorBudget:
    return ErrorBudget()


def ideal_budget() -> ErrorBudget:
    return ErrorBudget(
        pbs_extinction=float("inf"),
        lc_jitter_deg=0.0,
        efficiency_mismatch=0.0,
        time_bin_qubit_purity=1.0,
        polarizer_visibility=1.0,
    )
