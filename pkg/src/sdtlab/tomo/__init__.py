"""State reconstruction from coincidence counts."""
from .bme import SamplerConfig, bme_reconstruct, fit_bme
from .calibration import calibrate_efficiencies
from .cholesky import CholeskyParams, cholesky_to_density, density_to_cholesky
from .errors_mc import monte_carlo_errors
from .mle import ErrorBars, ReconstructionResult, fit_mle, mle_reconstruct
from .model import (
    CountRecord,
    DenseModel,
    EfficiencyCalibration,
    KroneckerModel,
    conditional_model,
    joint_model,
    predict_coincidences,
)

__all__ = [
    "CholeskyParams", "CountRecord", "DenseModel", "EfficiencyCalibration", "ErrorBars",
    "KroneckerModel", "ReconstructionResult", "SamplerConfig", "bme_reconstruct",
    "calibrate_efficiencies", "cholesky_to_density", "conditional_model", "density_to_cholesky",
    "fit_bme", "fit_mle", "joint_model", "mle_reconstruct", "monte_carlo_errors",
    "predict_coincidences",
]
