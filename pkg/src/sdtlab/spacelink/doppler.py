"""Relativistic Doppler shift of the time-bin separation."""
from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .orbit import PassProfile

C_LIGHT = 299_792_458.0
TIME_BIN_SEPARATION = 1.5e-9


def _beta(v) -> np.ndarray:
    b = np.asarray(v, dtype=float) / C_LIGHT
    if (np.abs(b) >= 1).any():
        raise ValidationError("speed must be below c")
    return b


def doppler_delta_t(v_r, tau_bin: float = TIME_BIN_SEPARATION):
    """Change of the inter-bin interval, (sqrt((1+b)/(1-b)) - 1) tau, b = v_r/c.

    Positive (lengthened) while receding, negative while approaching.
    """
    b = _beta(v_r)
    # sqrt((1+b)/(1-b)) - 1 written to avoid cancellation at small b
    ratio = np.sqrt((1 + b) / (1 - b))
    out = 2 * b / ((1 - b) * (ratio + 1)) * tau_bin
    return float(out) if out.ndim == 0 else out


def lorentz_gamma(v):
    b = _beta(v)
    # 1/sqrt(1-b^2) - 1 without cancellation, then add 1
    b2 = b * b
    g = 1.0 + b2 / (np.sqrt(1 - b2) * (1 + np.sqrt(1 - b2)))
    return float(g) if np.ndim(g) == 0 else g


def doppler_series(profile: PassProfile, tau_bin: float = TIME_BIN_SEPARATION) -> np.ndarray:
    return doppler_delta_t(profile.radial_velocity, tau_bin)


def doppler_swing(profile: PassProfile, tau_bin: float = TIME_BIN_SEPARATION) -> float:
    """Delta-t(t_stop) - Delta-t(t_start) over the pass."""
    dt = doppler_series(profile, tau_bin)
    return float(dt[-1] - dt[0])


def path_length_series(profile: PassProfile, tau_bin: float = TIME_BIN_SEPARATION) -> np.ndarray:
    """Equivalent interferometer path-length change c * Delta-t(t), meters."""
    return C_LIGHT * doppler_series(profile, tau_bin)


def phase_series(profile: PassProfile, wavelength: float, tau_bin: float = TIME_BIN_SEPARATION) -> np.ndarray:
    """Doppler phase 2 pi dL / lambda relative to the start of the pass."""
    dl = path_length_series(profile, tau_bin)
    return 2 * np.pi * (dl - dl[0]) / wavelength
