"""Proportional-integral stabilization of the time-bin interferometer phase.

The stabilization beam sees the interferometer phase pi/2 + delta, where
delta is the residual (disturbance plus actuator). Photodiode signals are

    I1 = (1 + V1 cos phi) / 2,   I2 = g (1 - V2 cos phi) / 2,

with port gain g; the error signal balances them with gamma = 1/g, so
E = 0 at delta = 0 and E ~ -(V1 + V2) delta / 2 nearby.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from ..errors import InstabilityError, ValidationError
from ..qcore import phase_error_stats
from .doppler import TIME_BIN_SEPARATION, phase_series
from .orbit import OrbitConfig, PassProfile, propagate_pass

STAB_WAVELENGTH = 532e-9
PHOTON_WAVELENGTH = 1550e-9
DIVERGENCE_FRINGES = 10.0


@dataclass(frozen=True)
class PIConfig:
    """Loop parameters. Default gains come from :func:`tune_pi_gains` on the
    reference overhead-pass ramp and are frozen here."""

    kp: float = 0.05
    ki: float = 60.0
    rate: float = 100.0
    setpoint: float = 0.0
    gamma: float = 0.6
    visibilities: tuple[float, float] = (0.9, 0.7)
    sensor_noise_std: float = 0.03
    settle_time: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValidationError("loop rate must be positive")
        if not self.gamma > 0:
            raise ValidationError("gamma must be positive")
        if not all(0 <= v <= 1 for v in self.visibilities):
            raise ValidationError("visibilities must lie in [0, 1]")
        if self.sensor_noise_std < 0:
            raise ValidationError("sensor noise must be non-negative")


def error_signal(i1, i2, gamma: float = 0.6):
    """E = (I1 - gamma I2) / (I1 + gamma I2)."""
    i1 = np.asarray(i1, dtype=float)
    i2 = np.asarray(i2, dtype=float)
    den = i1 + gamma * i2
    if np.any(den == 0):
        raise ValidationError("error signal undefined: I1 + gamma I2 = 0")
    e = (i1 - gamma * i2) / den
    return float(e) if e.ndim == 0 else e


def photodiode_signals(phase, visibilities=(0.9, 0.7), gamma: float = 0.6):
    """(I1, I2) for interferometer phase ``phase`` with port gain 1/gamma."""
    v1, v2 = visibilities
    c = np.cos(phase)
    return (1 + v1 * c) / 2, (1 - v2 * c) / (2 * gamma)


@dataclass(frozen=True)
class StabilizationTrace:
    t: np.ndarray
    disturbance: np.ndarray
    residual: np.ndarray
    error: np.ndarray
    actuator: np.ndarray
    closed_loop: bool
    settle_time: float

    def _settled(self) -> np.ndarray:
        return self.residual[self.t - self.t[0] >= self.settle_time]

    @property
    def residual_std_deg(self) -> float:
        return phase_error_stats(self._settled())[1]

    @property
    def fringes_swept(self) -> float:
        return float((self.residual.max() - self.residual.min()) / (2 * np.pi))

    def rows(self) -> list[dict]:
        return [
            {"t_s": float(a), "disturbance_rad": float(b), "residual_rad": float(c),
             "error_signal": float(d), "actuator_rad": float(e)}
            for a, b, c, d, e in zip(self.t, self.disturbance, self.residual, self.error, self.actuator)
        ]


def reference_disturbance(
    orbit: Optional[OrbitConfig] = None,
    max_elevation: float = 90.0,
    rate: float = 100.0,
    wavelength: float = STAB_WAVELENGTH,
    tau_bin: float = TIME_BIN_SEPARATION,
) -> tuple[np.ndarray, np.ndarray]:
    """(t, phase) of the Doppler ramp at the stabilization wavelength."""
    profile = propagate_pass(orbit or OrbitConfig(), max_elevation, 1.0 / rate)
    return profile.t - profile.t[0], phase_series(profile, wavelength, tau_bin)


def _as_disturbance(doppler, rate: float) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(doppler, PassProfile):
        t = doppler.t - doppler.t[0]
        phi = phase_series(doppler, STAB_WAVELENGTH)
    else:
        t, phi = (np.asarray(x, dtype=float) for x in doppler)
    if t.size < 2:
        raise ValidationError("disturbance series needs at least two samples")
    if np.max(np.diff(t)) > 1.0 / rate + 1e-12:
        raise ValidationError("disturbance must be sampled at least at the controller rate")
    return t, phi


def simulate_pi_stabilization(
    doppler,
    pi: Optional[PIConfig] = None,
    seed: int = 0,
    *,
    closed_loop: bool = True,
) -> StabilizationTrace:
    """Discrete-time loop at ``pi.rate``.

    ``doppler`` is a PassProfile (converted to the stabilization-beam phase)
    or a ``(t, phase)`` pair. The actuator output computed at step k acts
    from step k+1. Raises InstabilityError (carrying the partial trace) if
    the residual leaves +-10 fringes.
    """
    pi = pi or PIConfig()
    t_in, phi_in = _as_disturbance(doppler, pi.rate)
    n = int(np.floor((t_in[-1] - t_in[0]) * pi.rate)) + 1
    t = t_in[0] + np.arange(n) / pi.rate
    dist = np.interp(t, t_in, phi_in)
    rng = np.random.default_rng(seed)
    noise = pi.sensor_noise_std * rng.standard_normal((n, 2))

    residual = np.empty(n)
    error = np.empty(n)
    actuator = np.empty(n)
    u = 0.0
    integ = 0.0
    limit = DIVERGENCE_FRINGES * 2 * np.pi
    for k in range(n):
        delta = dist[k] + u
        residual[k] = delta
        i1, i2 = photodiode_signals(np.pi / 2 + delta, pi.visibilities, pi.gamma)
        i1 *= 1 + noise[k, 0]
        i2 *= 1 + noise[k, 1]
        e = error_signal(i1, i2, pi.gamma) - pi.setpoint
        error[k] = e
        if closed_loop:
            integ += e / pi.rate
            u = pi.kp * e + pi.ki * integ
        actuator[k] = u
        if closed_loop and abs(delta) > limit:
            trace = StabilizationTrace(
                t[: k + 1], dist[: k + 1], residual[: k + 1], error[: k + 1], actuator[: k + 1],
                True, pi.settle_time,
            )
            raise InstabilityError(
                f"residual exceeded {DIVERGENCE_FRINGES:g} fringes at t={t[k]:.2f} s "
                f"(kp={pi.kp}, ki={pi.ki})",
                trace,
            )
    return StabilizationTrace(t, dist, residual, error, actuator, closed_loop, pi.settle_time)


def tune_pi_gains(
    doppler=None,
    pi: Optional[PIConfig] = None,
    seed: int = 0,
    kp_grid: Sequence[float] = (0.05, 0.1, 0.2, 0.4, 0.6),
    ki_grid: Sequence[float] = (10.0, 30.0, 60.0, 100.0, 150.0, 200.0, 300.0),
) -> tuple[float, float, float]:
    """Grid search for (kp, ki) minimizing the settled residual std.

    Returns ``(kp, ki, std_deg)``; unstable combinations are skipped.
    """
    pi = pi or PIConfig()
    doppler = doppler if doppler is not None else reference_disturbance(rate=pi.rate)
    best = None
    for kp in kp_grid:
        for ki in ki_grid:
            try:
                tr = simulate_pi_stabilization(doppler, replace(pi, kp=kp, ki=ki), seed)
            except InstabilityError:
                continue
            std = tr.residual_std_deg
            if best is None or std < best[2]:
                best = (float(kp), float(ki), std)
    if best is None:
        raise InstabilityError("no stable gains on the grid", None)
    return best


@dataclass(frozen=True)
class StabilizedFidelity:
    fidelity_on: float
    fidelity_off: float
    residual_std_deg: float
    fringes_open_loop: float


def _segment_phases(t: np.ndarray, phase: np.ndarray, weights: np.ndarray, max_samples: int = 200):
    """Split the timeline into consecutive segments in proportion to ``weights``."""
    edges = np.concatenate([[0.0], np.cumsum(weights) / np.sum(weights)]) * (t[-1] - t[0]) + t[0]
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = phase[(t >= lo) & (t <= hi)]
        if sel.size == 0:
            sel = np.interp([0.5 * (lo + hi)], t, phase)
        step = max(1, sel.size // max_samples)
        out.append(sel[::step])
    return tuple(out)


def stabilized_sdt_fidelity(
    doppler=None,
    pi: Optional[PIConfig] = None,
    source=None,
    config=None,
    seed: int = 0,
    *,
    n_trials: int = 4,
    stab_wavelength: float = STAB_WAVELENGTH,
    photon_wavelength: float = PHOTON_WAVELENGTH,
) -> StabilizedFidelity:
    """Mean SDT fidelity with the time-bin phase driven by the PI residual
    (on) and by the raw Doppler ramp (off).

    The tomography settings are measured back to back across the trace,
    each occupying time in proportion to its duration scale; Bob's late
    time bin picks up the stabilization-beam phase scaled by
    stab_wavelength / photon_wavelength. Trial i uses random target phases
    and counts seeded by ``derive_seed(seed, i)``.
    """
    from ..sdtsim.encoder import LCEncoder
    from ..sdtsim.sweep import derive_seed
    from ..sdtsim.trial import TrialConfig, run_sdt_trial

    pi = pi or PIConfig()
    doppler = doppler if doppler is not None else reference_disturbance(rate=pi.rate)
    config = config or TrialConfig()
    on = simulate_pi_stabilization(doppler, pi, seed)
    off = simulate_pi_stabilization(doppler, pi, seed, closed_loop=False)
    weights = np.array([s.duration_scale for s in config.catalog()])
    scale = stab_wavelength / photon_wavelength
    fids = {}
    for label, trace in (("on", on), ("off", off)):
        phases = _segment_phases(trace.t, trace.residual * scale, weights)
        cfg = replace(config, bob_phase=phases)
        vals = []
        for i in range(n_trials):
            s = derive_seed(seed, i)
            rng = np.random.default_rng(s)
            enc = LCEncoder.for_target(rng.uniform(0, 2 * np.pi, 3))
            vals.append(run_sdt_trial(enc, source, cfg, s).mean_fidelity)
        fids[label] = float(np.mean(vals))
    return StabilizedFidelity(fids["on"], fids["off"], on.residual_std_deg, off.fringes_swept)
