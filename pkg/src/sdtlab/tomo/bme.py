"""Bayesian mean estimation by sequential Monte Carlo with likelihood tempering.

Particles live in Cholesky-parameter space under a prior that induces the
Hilbert-Schmidt measure on states. The likelihood is raised from power 0 to
1 in adaptive steps; after each step particles are resampled and moved by
random-walk Metropolis kernels that leave the tempered posterior invariant.
The total-pairs normalization is profiled out, which reduces the Poisson
likelihood to the multinomial one.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from ..qcore import DensityOperator, fidelity
from .cholesky import unnormalized_density
from .mle import ReconstructionResult, build_model, hs_prior_sample
from .model import EfficiencyCalibration

_FLOOR = 1e-300


@dataclass(frozen=True)
class SamplerConfig:
    n_particles: int = 2000
    seed: int = 0
    ess_fraction: float = 0.5
    mh_steps: int = 8
    max_stages: int = 500
    min_ess_fraction: float = 0.1
    min_acceptance: float = 0.01


def _log_prior(theta: np.ndarray, d: int) -> np.ndarray:
    diag = theta[:, :d]
    off = theta[:, d:]
    with np.errstate(divide="ignore", invalid="ignore"):
        k = 2.0 * np.arange(1, d + 1) - 1.0
        lp = np.sum(k * np.log(diag) - diag * diag, axis=1) - np.sum(off * off, axis=1)
    return np.where(np.all(diag > 0, axis=1), lp, -np.inf)


def _ess(logw: np.ndarray) -> float:
    w = np.exp(logw - logw.max())
    return float(w.sum() ** 2 / np.sum(w * w))


def _systematic_resample(rng, logw: np.ndarray) -> np.ndarray:
    n = logw.size
    w = np.exp(logw - logw.max())
    cdf = np.cumsum(w / w.sum())
    cdf[-1] = 1.0
    return np.searchsorted(cdf, (rng.random() + np.arange(n)) / n)


class _ProfileLikelihood:
    def __init__(self, model, data):
        self.model = model
        self.data = np.asarray(data, dtype=float)
        self.total = self.data.sum()

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        if self.total == 0:
            return np.zeros(theta.shape[0])
        q = np.maximum(self.model.expected(unnormalized_density(theta)), _FLOOR)
        return np.log(q) @ self.data - self.total * np.log(q.sum(axis=1))


def fit_bme(model, data, config: Optional[SamplerConfig] = None) -> ReconstructionResult:
    cfg = config or SamplerConfig()
    rng = np.random.default_rng(cfg.seed)
    d = model.dim
    n = cfg.n_particles
    loglik = _ProfileLikelihood(model, data)

    theta = hs_prior_sample(rng, d, n)
    ll = loglik(theta)
    lp = _log_prior(theta, d)
    beta = 0.0
    logw = np.zeros(n)
    min_ess = float(n)
    acc_rates = []
    scale = 2.38 / np.sqrt(theta.shape[1])
    stages = 0
    while beta < 1.0 and stages < cfg.max_stages:
        stages += 1
        target = cfg.ess_fraction * n
        if _ess(logw + (1.0 - beta) * ll) >= target:
            new_beta = 1.0
        else:
            lo, hi = 0.0, 1.0 - beta
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _ess(logw + mid * ll) >= target:
                    lo = mid
                else:
                    hi = mid
            new_beta = beta + max(lo, 1e-12)
        logw = logw + (new_beta - beta) * ll
        beta = new_beta
        min_ess = min(min_ess, _ess(logw))

        idx = _systematic_resample(rng, logw)
        theta, ll, lp = theta[idx], ll[idx], lp[idx]
        logw = np.zeros(n)

        cov = np.cov(theta, rowvar=False) + 1e-12 * np.eye(theta.shape[1])
        chol = np.linalg.cholesky(cov)
        for _ in range(cfg.mh_steps):
            prop = theta + scale * rng.standard_normal(theta.shape) @ chol.T
            lp_new = _log_prior(prop, d)
            ok = np.isfinite(lp_new)
            ll_new = np.full(n, -np.inf)
            if ok.any():
                ll_new[ok] = loglik(prop[ok])
            log_alpha = (lp_new + beta * ll_new) - (lp + beta * ll)
            accept = np.log(rng.random(n)) < log_alpha
            theta = np.where(accept[:, None], prop, theta)
            ll = np.where(accept, ll_new, ll)
            lp = np.where(accept, lp_new, lp)
            rate = accept.mean()
            acc_rates.append(rate)
            # keep the acceptance rate near 0.25
            scale *= np.exp(0.5 * (rate - 0.25))

    m = unnormalized_density(theta)
    m = m / np.trace(m, axis1=1, axis2=2).real[:, None, None]
    w = np.exp(logw - logw.max())
    w /= w.sum()
    mean = np.einsum("k,kij->ij", w, m)
    mean = 0.5 * (mean + mean.conj().T)
    mean /= np.trace(mean).real

    warnings = []
    if min_ess < cfg.min_ess_fraction * n:
        warnings.append(f"effective sample size fell to {min_ess:.1f} of {n} particles")
    if acc_rates and np.mean(acc_rates[-cfg.mh_steps:]) < cfg.min_acceptance:
        warnings.append("Metropolis moves stalled (acceptance below threshold); resampling degenerate")
    if beta < 1.0:
        warnings.append(f"tempering stopped at beta={beta:.3g} after {stages} stages")

    return ReconstructionResult(
        rho=DensityOperator(mean),
        log_likelihood=float(np.dot(w, ll)),
        estimator="bme",
        iterations=stages,
        converged=beta >= 1.0,
        seed=cfg.seed,
        warnings=tuple(warnings),
    )


def bme_reconstruct(
    counts: Sequence,
    settings: Sequence,
    calib: Optional[EfficiencyCalibration] = None,
    sampler_config: Optional[SamplerConfig] = None,
    *,
    alice_outcome: int = 1,
    target=None,
    calib_alice: Optional[EfficiencyCalibration] = None,
) -> ReconstructionResult:
    """Posterior-mean state given the counts (empty/zero counts return the prior mean)."""
    model, data = build_model(counts, settings, calib, alice_outcome, calib_alice)
    result = fit_bme(model, data, sampler_config)
    if target is not None:
        result = replace(result, fidelity_to_target=fidelity(result.rho, target))
    return result
