"""Monte Carlo error bars by Poisson resampling of the observed counts."""
from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np

from ..errors import ConvergenceError, SDTError, UndefinedPhaseError, ValidationError
from ..qcore import extract_phases, fidelity, phase_error_stats, purity
from .mle import ErrorBars, build_model, fit_mle
from .model import EfficiencyCalibration

log = logging.getLogger(__name__)

DEFAULT_MC_SAMPLES = 100
MAX_FAILURE_FRACTION = 0.2


def monte_carlo_errors(
    counts: Sequence,
    settings: Sequence,
    calib: Optional[EfficiencyCalibration] = None,
    n_samples: int = DEFAULT_MC_SAMPLES,
    target=None,
    *,
    alice_outcome: int = 1,
    seed: int = 0,
    calib_alice: Optional[EfficiencyCalibration] = None,
    n_starts: int = 1,
    init: Optional[np.ndarray] = None,
) -> ErrorBars:
    """Std of fidelity, purity and phases over ``n_samples`` Poisson resamples.

    Each observed count is redrawn as Poisson(observed) and re-fit by MLE
    (warm-started from ``init`` or from a fit of the observed data).
    """
    if n_samples < 2:
        raise ValidationError("need at least two Monte Carlo samples")
    model, data = build_model(counts, settings, calib, alice_outcome, calib_alice)
    if init is None:
        init = fit_mle(model, data, seed=seed).params
    rng = np.random.default_rng(seed)
    fids, purs, phases = [], [], []
    failures = 0
    for _ in range(n_samples):
        sample = rng.poisson(data).astype(float)
        try:
            res = fit_mle(model, sample, n_starts=n_starts, init=init, seed=seed)
        except (ConvergenceError, SDTError) as exc:
            log.debug("resample failed: %s", exc)
            failures += 1
            continue
        purs.append(purity(res.rho))
        if target is not None:
            fids.append(fidelity(res.rho, target))
        if model.dim == 4:
            try:
                phases.append(extract_phases(res.rho).as_array())
            except UndefinedPhaseError:
                pass
    if failures > MAX_FAILURE_FRACTION * n_samples:
        raise SDTError(f"{failures} of {n_samples} Monte Carlo reconstructions failed")
    phase_std = None
    if len(phases) >= 2:
        arr = np.array(phases)
        phase_std = tuple(phase_error_stats(arr[:, i])[1] for i in range(3))
    return ErrorBars(
        fidelity_std=float(np.std(fids, ddof=1)) if len(fids) >= 2 else None,
        purity_std=float(np.std(purs, ddof=1)),
        phase_std_deg=phase_std,
        n_samples=n_samples,
        n_failures=failures,
    )
