"""Maximum-likelihood reconstruction over Cholesky parameters."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from ..errors import ConvergenceError, DegenerateStateError
from ..optics import JointSetting
from ..qcore import DensityOperator, fidelity
from .cholesky import lower_indices, params_to_lower
from .model import EfficiencyCalibration, conditional_model, joint_model

log = logging.getLogger(__name__)

_FLOOR = 1e-12


@dataclass(frozen=True)
class ErrorBars:
    fidelity_std: Optional[float]
    purity_std: float
    phase_std_deg: Optional[tuple[float, float, float]]
    n_samples: int
    n_failures: int


@dataclass(frozen=True)
class ReconstructionResult:
    rho: DensityOperator
    log_likelihood: float
    estimator: str = "mle"
    total_pairs: float = float("nan")
    iterations: int = 0
    converged: bool = True
    likelihood_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    fidelity_to_target: Optional[float] = None
    error_bars: Optional[ErrorBars] = None
    seed: Optional[int] = None
    warnings: tuple[str, ...] = ()
    params: Optional[np.ndarray] = None

    def metadata(self) -> dict:
        return {
            "estimator": self.estimator,
            "seed": self.seed,
            "iterations": self.iterations,
            "log_likelihood": self.log_likelihood,
            "total_pairs": self.total_pairs,
            "converged": self.converged,
            "warnings": list(self.warnings),
        }


def _grad_from_lower(L: np.ndarray, G: np.ndarray) -> np.ndarray:
    d = L.shape[0]
    X = 2.0 * (L @ G)
    rows, cols = lower_indices(d)
    off = X[rows, cols]
    return np.concatenate([np.real(np.diag(X)), np.stack([off.real, off.imag], axis=1).ravel()])


class NegLogLikelihood:
    """Objective and analytic gradient in Cholesky parameters.

    The trace of L^dagger L is left free, so it plays the role of the
    total-pairs normalization. Values are divided by the total count.
    """

    def __init__(self, model, data, likelihood: str = "poisson"):
        if likelihood not in ("poisson", "gaussian"):
            raise ValueError(f"unknown likelihood {likelihood!r}")
        self.model = model
        self.data = np.asarray(data, dtype=float)
        self.kind = likelihood
        self.total = float(self.data.sum())
        if self.total <= 0:
            raise DegenerateStateError("no counts: nothing to reconstruct")
        self._var = np.maximum(self.data, 1.0)

    def __call__(self, t):
        L = params_to_lower(t)
        rho = L.conj().T @ L
        nbar = self.model.expected(rho)
        if self.kind == "poisson":
            nb = np.maximum(nbar, _FLOOR)
            # deviance form: same minimizer, but ~0 at the optimum, so the
            # last digits are not swamped by the n ln n constant
            n = self.data
            pos = n > 0
            f = np.sum(nb[~pos]) + np.sum(
                nb[pos] - n[pos] - n[pos] * np.log1p((nb[pos] - n[pos]) / n[pos])
            )
            g = 1.0 - n / nb
        else:
            r = nbar - self.data
            f = 0.5 * np.sum(r * r / self._var)
            g = r / self._var
        G = self.model.adjoint(g)
        return f / self.total, _grad_from_lower(L, G) / self.total

    def log_likelihood(self, t) -> float:
        L = params_to_lower(t)
        nbar = np.maximum(self.model.expected(L.conj().T @ L), _FLOOR)
        if self.kind == "poisson":
            return float(np.sum(self.data * np.log(nbar) - nbar - gammaln(self.data + 1)))
        return float(-0.5 * np.sum((nbar - self.data) ** 2 / self._var))


def hs_prior_sample(rng: np.random.Generator, d: int, size=None) -> np.ndarray:
    """Cholesky parameters whose normalized state is Hilbert-Schmidt distributed.

    Bartlett construction: |L_ii|^2 ~ Gamma(i+1), off-diagonals ~ CN(0, 1).
    """
    shape = () if size is None else (size,)
    diag = np.sqrt(rng.gamma(np.arange(1, d + 1), 1.0, size=shape + (d,)))
    off = rng.normal(0.0, np.sqrt(0.5), size=shape + (d * (d - 1),))
    return np.concatenate([diag, off], axis=-1)


def _scaled_start(t: np.ndarray, model, total: float) -> np.ndarray:
    L = params_to_lower(t)
    nsum = model.expected(L.conj().T @ L).sum()
    return t * np.sqrt(total / nsum)


def fit_mle(
    model,
    data,
    *,
    likelihood: str = "poisson",
    n_starts: int = 5,
    seed: int = 0,
    init: Optional[np.ndarray] = None,
    gtol: float = 1e-12,
    max_iter: int = 5000,
) -> ReconstructionResult:
    """Multi-start quasi-Newton minimization of the negative log-likelihood.

    Start 0 is the maximally mixed state (or ``init``), the rest are random
    Hilbert-Schmidt draws from ``seed``.
    """
    obj = NegLogLikelihood(model, data, likelihood)
    d = model.dim
    rng = np.random.default_rng(seed)
    starts = []
    if init is not None:
        starts.append(_scaled_start(np.asarray(init, dtype=float), model, obj.total))
    else:
        starts.append(_scaled_start(np.concatenate([np.ones(d), np.zeros(d * d - d)]), model, obj.total))
    while len(starts) < n_starts:
        starts.append(_scaled_start(hs_prior_sample(rng, d), model, obj.total))

    best = None
    for x0 in starts:
        trace = [obj(x0)[0]]
        res = minimize(
            obj, x0, jac=True, method="L-BFGS-B",
            callback=lambda xk: trace.append(obj(xk)[0]),
            options={"maxiter": max_iter, "gtol": gtol, "ftol": 0.0, "maxcor": 30},
        )
        cand = (res.fun, res, np.array(trace))
        if best is None or res.fun < best[0]:
            best = cand
    _, res, trace = best

    L = params_to_lower(res.x)
    m = L.conj().T @ L
    tr = np.trace(m).real
    rho = DensityOperator(m / tr)
    warnings = []
    # with ftol = 0 an abnormal line search is the usual stop at machine precision
    if res.status == 2 and np.max(np.abs(res.jac)) > 1e-6:
        warnings.append(f"line search stopped early: {res.message}")
    result = ReconstructionResult(
        rho=rho,
        log_likelihood=obj.log_likelihood(res.x),
        estimator="mle",
        total_pairs=tr,
        iterations=int(res.nit),
        converged=res.status != 1,
        # stored as log-likelihood per count (up to a constant)
        likelihood_trace=-trace,
        seed=seed,
        warnings=tuple(warnings),
        params=res.x,
    )
    if res.status == 1:
        raise ConvergenceError(f"MLE did not converge in {max_iter} iterations", best=result)
    return result


def build_model(counts, settings, calib=None, alice_outcome: int = 1, calib_alice=None):
    """Pick the conditional (4-dim) or joint (16-dim) model from the catalog type."""
    if settings and isinstance(settings[0], JointSetting):
        return joint_model(counts, settings, calib, calib_alice)
    return conditional_model(counts, settings, calib, alice_outcome)


def mle_reconstruct(
    counts: Sequence,
    settings: Sequence,
    calib: Optional[EfficiencyCalibration] = None,
    *,
    alice_outcome: int = 1,
    target=None,
    calib_alice: Optional[EfficiencyCalibration] = None,
    **fit_kwargs,
) -> ReconstructionResult:
    model, data = build_model(counts, settings, calib, alice_outcome, calib_alice)
    if data.sum() <= 0:
        raise DegenerateStateError("all counts are zero")
    result = fit_mle(model, data, **fit_kwargs)
    if target is not None:
        result = replace(result, fidelity_to_target=fidelity(result.rho, target))
    return result
