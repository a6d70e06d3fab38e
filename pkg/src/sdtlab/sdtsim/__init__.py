"""End-to-end simulation of superdense teleportation runs."""
from .budget import ErrorBudget, ideal_budget, lab_error_budget
from .counts import expected_coincidences, pair_rate_for_level, records_from_counts, simulate_counts
from .encoder import LCEncoder, realized_phases, target_phases
from .ks import KSResult, ks_critical_coefficient, ks_statistic, ks_threshold, ks_two_sample, resolvable_states
from .source import SourceModel, apparatus_operators, bob_conditionals, encode_density, source_density
from .sweep import SweepResult, derive_seed, fidelity_vs_counts_curve, grid_points, phase_grid_sweep
from .trial import OutcomeResult, TrialConfig, TrialResult, run_sdt_trial

__all__ = [
    "ErrorBudget", "KSResult", "LCEncoder", "OutcomeResult", "SourceModel", "SweepResult",
    "TrialConfig", "TrialResult", "apparatus_operators", "bob_conditionals", "derive_seed",
    "encode_density", "expected_coincidences", "fidelity_vs_counts_curve", "grid_points",
    "ideal_budget", "ks_critical_coefficient", "ks_statistic", "ks_threshold", "ks_two_sample",
    "pair_rate_for_level", "lab_error_budget", "phase_grid_sweep", "realized_phases",
    "records_from_counts", "resolvable_states", "run_sdt_trial", "simulate_counts",
    "source_density", "target_phases",
]
