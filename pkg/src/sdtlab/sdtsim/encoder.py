"""Liquid-crystal phase encoding on Charles' photon."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..qcore import EquimodularPhases, wrap_2pi


@dataclass(frozen=True)
class LCEncoder:
    """Retardances of the three liquid crystals plus calibration offsets (radians).

    LC_A shifts both phi1 and phi3, LC_B only phi1, LC_C enters phi2 with a
    minus sign. ``drift_rate`` (rad/hour) is added to every target phase
    after ``elapsed_hours`` of operation.
    """

    phi_lc_a: float = 0.0
    phi_lc_b: float = 0.0
    phi_lc_c: float = 0.0
    calib_offsets: tuple[float, float, float] = (0.0, 0.0, 0.0)
    drift_rate: float = 0.0

    def __post_init__(self):
        for name in ("phi_lc_a", "phi_lc_b", "phi_lc_c"):
            object.__setattr__(self, name, wrap_2pi(getattr(self, name)))
        object.__setattr__(self, "calib_offsets", tuple(float(wrap_2pi(x)) for x in self.calib_offsets))

    @classmethod
    def for_target(cls, phases, calib_offsets=(0.0, 0.0, 0.0), drift_rate: float = 0.0) -> "LCEncoder":
        """LC retardances that realize the requested target phases."""
        p = phases.as_array() if isinstance(phases, EquimodularPhases) else np.asarray(phases, float)
        c = np.asarray(calib_offsets, dtype=float)
        a = p[2] - c[2]
        b = p[0] - c[0] - a
        lc_c = c[1] - p[1]
        return cls(a, b, lc_c, tuple(c), drift_rate)


def target_phases(enc: LCEncoder) -> EquimodularPhases:
    c1, c2, c3 = enc.calib_offsets
    return EquimodularPhases(
        c1 + enc.phi_lc_a + enc.phi_lc_b,
        c2 - enc.phi_lc_c,
        c3 + enc.phi_lc_a,
    )


def realized_phases(
    enc: LCEncoder,
    jitter: np.ndarray | None = None,
    elapsed_hours: float = 0.0,
) -> EquimodularPhases:
    """Phases actually imprinted when each LC is off by ``jitter`` (A, B, C; radians)."""
    ja, jb, jc = (0.0, 0.0, 0.0) if jitter is None else np.asarray(jitter, float)
    drift = enc.drift_rate * elapsed_hours
    t = target_phases(enc).as_array()
    return EquimodularPhases(t[0] + ja + jb + drift, t[1] - jc + drift, t[2] + ja + drift)
