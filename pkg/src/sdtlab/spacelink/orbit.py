"""Pass geometry for a circular orbit over a spherical, non-rotating Earth.

A pass is parametrized by its maximum elevation. The ground station sits a
cross-track central angle psi0 from the orbit plane; the satellite's
central angle to the station obeys cos(psi) = cos(psi0) cos(omega t), with
t = 0 at closest approach.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ValidationError

EARTH_RADIUS = 6.371e6  # m, mean radius
GM_EARTH = 3.986004418e14  # m^3 s^-2


@dataclass(frozen=True)
class OrbitConfig:
    """Orbit and station parameters.

    Inclination and station latitude only fix which passes occur; in the
    max-elevation parametrization they do not alter a given pass.
    """

    altitude: float = 4.0e5
    inclination: float = 51.0
    ground_lat: float = 39.0
    min_elevation: float = 20.0
    earth_radius: float = EARTH_RADIUS

    def __post_init__(self):
        if not self.altitude > 0:
            raise ValidationError("altitude must be positive")
        if not 0 <= self.min_elevation < 90:
            raise ValidationError("min_elevation must lie in [0, 90) degrees")

    @property
    def orbit_radius(self) -> float:
        return self.earth_radius + self.altitude

    @property
    def orbital_speed(self) -> float:
        return float(np.sqrt(GM_EARTH / self.orbit_radius))

    @property
    def angular_rate(self) -> float:
        return self.orbital_speed / self.orbit_radius


@dataclass(frozen=True)
class PassProfile:
    t: np.ndarray
    range: np.ndarray
    elevation: np.ndarray
    radial_velocity: np.ndarray
    max_elevation: float
    dt: float

    def __len__(self) -> int:
        return self.t.size

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0]) if self.t.size else 0.0

    def rows(self) -> list[dict]:
        return [
            {"t_s": float(t), "range_m": float(r), "elevation_deg": float(e), "v_r_m_s": float(v)}
            for t, r, e, v in zip(self.t, self.range, self.elevation, self.radial_velocity)
        ]


def range_at_elevation(elevation_deg, altitude: float = 4.0e5, earth_radius: float = EARTH_RADIUS):
    """Slant range r(e) = sqrt(R^2 sin^2 e + 2 R h + h^2) - R sin e."""
    s = np.sin(np.radians(elevation_deg))
    r = np.sqrt(earth_radius**2 * s * s + 2 * earth_radius * altitude + altitude**2) - earth_radius * s
    return float(r) if np.ndim(r) == 0 else r


def central_angle_at_elevation(elevation_deg, orbit: OrbitConfig):
    e = np.radians(elevation_deg)
    return np.arccos(orbit.earth_radius * np.cos(e) / orbit.orbit_radius) - e


def _elevation_from_central_angle(psi, orbit: OrbitConfig):
    return np.degrees(np.arctan2(np.cos(psi) - orbit.earth_radius / orbit.orbit_radius, np.sin(psi)))


def _range_from_central_angle(psi, orbit: OrbitConfig):
    re, ro = orbit.earth_radius, orbit.orbit_radius
    return np.sqrt(re * re + ro * ro - 2 * re * ro * np.cos(psi))


def propagate_pass(orbit: OrbitConfig, max_elevation: float, dt: float = 1.0) -> PassProfile:
    """Time series of a pass above ``orbit.min_elevation``, symmetric about t = 0.

    Samples are evenly spaced with step close to ``dt`` so that both
    endpoints sit exactly on the elevation cutoff. V_r = dr/dt by central
    differences (positive when receding).
    """
    if not orbit.min_elevation < max_elevation <= 90:
        raise ValidationError(
            f"max elevation {max_elevation} must exceed the {orbit.min_elevation} deg cutoff and be <= 90"
        )
    if not dt > 0:
        raise ValidationError("dt must be positive")
    psi0 = central_angle_at_elevation(max_elevation, orbit)
    psi_edge = central_angle_at_elevation(orbit.min_elevation, orbit)
    theta_edge = np.arccos(np.clip(np.cos(psi_edge) / np.cos(psi0), -1.0, 1.0))
    t_edge = theta_edge / orbit.angular_rate
    n = max(int(np.ceil(2 * t_edge / dt)) + 1, 3)
    t = np.linspace(-t_edge, t_edge, n)
    psi = np.arccos(np.cos(psi0) * np.cos(orbit.angular_rate * t))
    r = _range_from_central_angle(psi, orbit)
    elev = _elevation_from_central_angle(psi, orbit)
    v_r = np.gradient(r, t, edge_order=2)
    return PassProfile(t, r, elev, v_r, float(max_elevation), float(t[1] - t[0]))


def pass_summary_curve(
    orbit: OrbitConfig,
    budget,
    elevations: Sequence[float],
    dt: float = 1.0,
) -> list[dict]:
    """Per-pass rows: max elevation, total coincidences, min and max range."""
    from .link import coincidences_per_pass

    rows = []
    for e in elevations:
        p = propagate_pass(orbit, e, dt)
        rows.append(
            {
                "max_elevation_deg": float(e),
                "total_coincidences": coincidences_per_pass(p, budget),
                "min_range_m": float(p.range.min()),
                "max_range_m": float(p.range.max()),
            }
        )
    return rows
