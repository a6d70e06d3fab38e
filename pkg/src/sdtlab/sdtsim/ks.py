"""Two-sample Kolmogorov-Smirnov test for phase resolution."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class KSResult:
    statistic: float
    threshold: float
    alpha: float
    reject: bool
    n1: int
    n2: int


def ks_critical_coefficient(alpha: float) -> float:
    """c(alpha) = sqrt(-ln(alpha / 2) / 2)."""
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie in (0, 1)")
    return math.sqrt(-0.5 * math.log(alpha / 2))


def ks_threshold(alpha: float, k: int, l: int) -> float:
    return ks_critical_coefficient(alpha) * math.sqrt((k + l) / (k * l))


def ks_statistic(sample1: Sequence[float], sample2: Sequence[float]) -> float:
    """sup_x |F1(x) - F2(x)| over the right-continuous empirical CDFs."""
    a = np.sort(np.asarray(sample1, dtype=float))
    b = np.sort(np.asarray(sample2, dtype=float))
    x = np.concatenate([a, b])
    f1 = np.searchsorted(a, x, side="right") / a.size
    f2 = np.searchsorted(b, x, side="right") / b.size
    return float(np.max(np.abs(f1 - f2)))


def ks_two_sample(sample1: Sequence[float], sample2: Sequence[float], alpha: float = 0.05) -> KSResult:
    """Reject equal distributions when D exceeds c(alpha) sqrt((k+l)/(k l)).

    Angles are compared as plain numbers, so both samples must use the same
    branch (e.g. degrees around the expected value).
    """
    k, l = len(sample1), len(sample2)
    if k == 0 or l == 0:
        raise ValidationError("both samples must be non-empty")
    d = ks_statistic(sample1, sample2)
    thr = ks_threshold(alpha, k, l)
    return KSResult(d, thr, float(alpha), bool(d > thr), k, l)


def resolvable_states(phase_resolution_deg: float) -> int:
    """floor((360 / resolution)^3): distinguishable states on the phase torus."""
    if not 0 < phase_resolution_deg <= 360:
        raise ValidationError("resolution must lie in (0, 360] degrees")
    # round away float noise before flooring (e.g. 360/90 cubed)
    return int(math.floor(round((360.0 / phase_resolution_deg) ** 3, 9)))
