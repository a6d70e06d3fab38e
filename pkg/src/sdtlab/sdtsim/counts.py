"""Count-level forward simulation of the SDT apparatus."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..errors import ValidationError
from ..optics import TomographySetting, build_projector_set, settings_for_36
from ..qcore import EquimodularPhases
from ..tomo.model import CountRecord, EfficiencyCalibration
from .source import SourceModel, apparatus_operators, bob_conditionals, encode_density, source_density


def _phase_array(phases) -> np.ndarray:
    if isinstance(phases, EquimodularPhases):
        return phases.as_array()
    return np.asarray(phases, dtype=float).reshape(3)


def _time_bin_dephase(ops: np.ndarray, theta) -> np.ndarray:
    """Average U^dag M U over the Bob time-bin phases ``theta`` (U = e^{i theta} on t2)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    u = np.ones((theta.size, 4), dtype=complex)
    u[:, 2:] = np.exp(1j * theta)[:, None]
    # (U^dag M U)_ij = conj(u_i) M_ij u_j, averaged over samples
    corr = np.einsum("ki,kj->ij", u.conj(), u) / theta.size
    return ops * corr[None, :, :]


def expected_coincidences(
    phases,
    source: SourceModel,
    settings: Optional[Sequence[TomographySetting]] = None,
    pair_rate: float = 1.0,
    calib: Optional[EfficiencyCalibration] = None,
    *,
    duration: float = 1.0,
    polarizer_visibility: float = 1.0,
    confusion: Optional[np.ndarray] = None,
    efficiency_factors: Optional[np.ndarray] = None,
    bob_phase: Optional[Sequence] = None,
) -> np.ndarray:
    """Mean coincidences, shape (n_settings, 4 Alice, 4 Bob).

    ``efficiency_factors`` (n_settings, 4) multiply the true efficiencies on
    top of ``calib``; ``bob_phase[s]`` is one phase or a sample of phases
    (radians) on Bob's late time bin during setting s.
    """
    if not pair_rate > 0:
        raise ValidationError("pair_rate must be positive")
    settings = list(settings) if settings is not None else settings_for_36()
    calib = calib or EfficiencyCalibration.ideal()
    rho = encode_density(source_density(source), _phase_array(phases))
    cond = bob_conditionals(rho, confusion)
    ideal_apparatus = polarizer_visibility >= 1.0 and np.isinf(source.polarizer_extinction)
    out = np.empty((len(settings), 4, 4))
    for s, st in enumerate(settings):
        if ideal_apparatus:
            ops = build_projector_set(st).stacked()
        else:
            ops = apparatus_operators(
                st, polarizer_visibility=polarizer_visibility, pbs_extinction=source.polarizer_extinction
            )
        if bob_phase is not None:
            ops = _time_bin_dephase(ops, bob_phase[s])
        probs = np.einsum("bij,aji->ab", ops, cond).real
        eff = calib.for_setting(s)
        if efficiency_factors is not None:
            eff = eff * efficiency_factors[s]
        t = duration * st.duration_scale
        out[s] = pair_rate * t * probs * eff[None, :] + source.background_rate * t
    return np.clip(out, 0.0, None)


def records_from_counts(coinc: np.ndarray, settings: Sequence[TomographySetting], duration: float) -> list[CountRecord]:
    """Wrap an integer (S, 4, 4) coincidence array as CountRecords.

    Singles are filled with the coincidence marginals (only heralded events
    are simulated).
    """
    recs = []
    for s, st in enumerate(settings):
        c = np.asarray(coinc[s], dtype=np.int64)
        singles = np.concatenate([c.sum(axis=1), c.sum(axis=0)])
        recs.append(CountRecord(s + 1, duration * st.duration_scale, singles, c))
    return recs


def simulate_counts(
    phases,
    source: SourceModel,
    settings: Optional[Sequence[TomographySetting]] = None,
    pair_rate: float = 1.0,
    calib: Optional[EfficiencyCalibration] = None,
    seed: int | np.random.Generator = 0,
    *,
    duration: float = 1.0,
    **kwargs,
) -> list[CountRecord]:
    """Poisson-sampled count records, one per setting (deterministic in ``seed``).

    Keyword arguments are forwarded to :func:`expected_coincidences`.
    """
    settings = list(settings) if settings is not None else settings_for_36()
    mean = expected_coincidences(
        phases, source, settings, pair_rate, calib, duration=duration, **kwargs
    )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return records_from_counts(rng.poisson(mean), settings, duration)


def pair_rate_for_level(
    level: float,
    settings: Optional[Sequence[TomographySetting]] = None,
    duration: float = 1.0,
) -> float:
    """Pair rate giving ``level`` expected coincidences per conditional tomography.

    Evaluated for a maximally mixed Bob state with ideal efficiencies, so the
    realized total is close to, not exactly, ``level``.
    """
    if not level > 0:
        raise ValidationError("count level must be positive")
    settings = list(settings) if settings is not None else settings_for_36()
    per_pair = 0.0
    for st in settings:
        ops = build_projector_set(st).stacked()
        per_pair += st.duration_scale * np.trace(ops, axis1=1, axis2=2).real.sum() / 16.0
    return level / (duration * per_pair)
