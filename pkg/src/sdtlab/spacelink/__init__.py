"""Satellite-link analyses: pass geometry, link budget, Doppler and phase stabilization."""
from .doppler import (
    C_LIGHT,
    TIME_BIN_SEPARATION,
    doppler_delta_t,
    doppler_series,
    doppler_swing,
    lorentz_gamma,
    path_length_series,
    phase_series,
)
from .link import LinkBudget, coincidence_rate, coincidences_per_pass, friis_transmission
from .orbit import OrbitConfig, PassProfile, pass_summary_curve, propagate_pass, range_at_elevation
from .stabilization import (
    PIConfig,
    StabilizationTrace,
    StabilizedFidelity,
    error_signal,
    photodiode_signals,
    reference_disturbance,
    simulate_pi_stabilization,
    stabilized_sdt_fidelity,
    tune_pi_gains,
)

__all__ = [
    "C_LIGHT", "LinkBudget", "OrbitConfig", "PIConfig", "PassProfile", "StabilizationTrace",
    "StabilizedFidelity", "TIME_BIN_SEPARATION", "coincidence_rate", "coincidences_per_pass",
    "doppler_delta_t", "doppler_series", "doppler_swing", "error_signal", "friis_transmission",
    "lorentz_gamma", "pass_summary_curve", "path_length_series", "phase_series",
    "photodiode_signals", "propagate_pass", "range_at_elevation", "reference_disturbance",
    "simulate_pi_stabilization", "stabilized_sdt_fidelity", "tune_pi_gains",
]
