"""Friis link transmission and coincidences per pass."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from ..errors import ValidationError
from .orbit import PassProfile


@dataclass(frozen=True)
class LinkBudget:
    """Apertures, wavelength, fixed losses and source brightness.

    Fixed losses are receiver telescope + adaptive optics, ground
    analysis/detection and space analysis/detection, each in dB.
    """

    d_t: float = 0.1
    d_r: float = 1.0
    wavelength: float = 1550e-9
    receiver_loss_db: float = 6.0
    ground_analysis_loss_db: float = 4.0
    space_analysis_loss_db: float = 4.0
    pump_rep_rate: float = 4e8
    pair_probability: float = 0.01

    def __post_init__(self):
        if min(self.d_t, self.d_r, self.wavelength) <= 0:
            raise ValidationError("apertures and wavelength must be positive")
        if min(self.receiver_loss_db, self.ground_analysis_loss_db, self.space_analysis_loss_db) < 0:
            raise ValidationError("losses must be non-negative")
        if self.pump_rep_rate <= 0 or not 0 < self.pair_probability <= 1:
            raise ValidationError("invalid source brightness")

    @property
    def fixed_losses_db(self) -> float:
        return self.receiver_loss_db + self.ground_analysis_loss_db + self.space_analysis_loss_db

    @property
    def pair_rate(self) -> float:
        return self.pump_rep_rate * self.pair_probability


def friis_transmission(r, budget: LinkBudget | None = None):
    """eta(r) = (pi D_T D_R / (4 lambda r))^2, clamped to at most 1."""
    b = budget or LinkBudget()
    r = np.asarray(r, dtype=float)
    if (r <= 0).any():
        raise ValidationError("range must be positive")
    eta = np.minimum((np.pi * b.d_t * b.d_r / (4 * b.wavelength * r)) ** 2, 1.0)
    return float(eta) if eta.ndim == 0 else eta


def coincidence_rate(profile: PassProfile, budget: LinkBudget | None = None) -> np.ndarray:
    b = budget or LinkBudget()
    return b.pair_rate * friis_transmission(profile.range, b) * 10 ** (-b.fixed_losses_db / 10)


def coincidences_per_pass(profile: PassProfile, budget: LinkBudget | None = None) -> float:
    """Trapezoidal integral of the coincidence rate over the pass."""
    if len(profile) < 2:
        warnings.warn("empty pass: no samples above the elevation cutoff", stacklevel=2)
        return 0.0
    return float(trapezoid(coincidence_rate(profile, budget), profile.t))
