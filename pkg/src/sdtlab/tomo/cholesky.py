"""Cholesky parametrization: rho = L^dagger L / Tr(L^dagger L).

For d = 4 the 16 parameters fill ``L`` as::

    [[t1,        0,          0,          0 ],
     [t5+i t6,   t2,         0,          0 ],
     [t7+i t8,   t11+i t12,  t3,         0 ],
     [t9+i t10,  t13+i t14,  t15+i t16,  t4]]

i.e. the diagonal first, then the strictly-lower entries column by column
as (real, imag) pairs. The same ordering generalizes to any dimension.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import DegenerateStateError, ValidationError
from ..qcore import DensityOperator, as_density


@lru_cache(maxsize=None)
def lower_indices(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/col indices of the strictly-lower triangle, column-major."""
    rows, cols = [], []
    for j in range(d):
        for i in range(j + 1, d):
            rows.append(i)
            cols.append(j)
    return np.array(rows, dtype=int), np.array(cols, dtype=int)


def dim_from_param_count(n: int) -> int:
    d = int(round(np.sqrt(n)))
    if d * d != n:
        raise ValidationError(f"{n} parameters do not describe a square matrix")
    return d


@dataclass(frozen=True)
class CholeskyParams:
    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        dim_from_param_count(t.size)
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @property
    def dim(self) -> int:
        return dim_from_param_count(self.t.size)


def params_to_lower(t: np.ndarray, d: int | None = None) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    d = d or dim_from_param_count(t.shape[-1])
    rows, cols = lower_indices(d)
    batch = t.shape[:-1]
    L = np.zeros(batch + (d, d), dtype=complex)
    diag = np.arange(d)
    L[..., diag, diag] = t[..., :d]
    off = t[..., d:].reshape(batch + (-1, 2))
    L[..., rows, cols] = off[..., 0] + 1j * off[..., 1]
    return L


def lower_to_params(L: np.ndarray) -> np.ndarray:
    d = L.shape[-1]
    rows, cols = lower_indices(d)
    off = L[..., rows, cols]
    diag = np.real(np.diagonal(L, axis1=-2, axis2=-1))
    pairs = np.stack([off.real, off.imag], axis=-1).reshape(L.shape[:-2] + (-1,))
    return np.concatenate([diag, pairs], axis=-1)


def unnormalized_density(t: np.ndarray) -> np.ndarray:
    """L^dagger L without trace normalization (batch-aware)."""
    L = params_to_lower(t)
    return np.conj(np.swapaxes(L, -1, -2)) @ L


def cholesky_to_density(params) -> DensityOperator:
    t = params.t if isinstance(params, CholeskyParams) else np.asarray(params, dtype=float)
    m = unnormalized_density(t)
    tr = np.trace(m).real
    if tr <= 0:
        raise DegenerateStateError("all Cholesky parameters are zero")
    return DensityOperator(m / tr)


def density_to_cholesky(rho, jitter: float = 0.0) -> CholeskyParams:
    """Parameters ``t`` with L^dagger L == rho (trace is preserved).

    Rank-deficient inputs need a small ``jitter`` added to the diagonal.
    """
    if isinstance(rho, np.ndarray):
        m = np.asarray(rho, dtype=complex)
    else:
        m = as_density(rho).matrix
    d = m.shape[0]
    if jitter:
        m = m + jitter * np.eye(d)
    # rho = U U^dagger with U upper  <=>  P rho P = C C^dagger with C lower
    rev = np.arange(d)[::-1]
    C = np.linalg.cholesky(m[np.ix_(rev, rev)])
    U = C[np.ix_(rev, rev)]
    L = U.conj().T
    return CholeskyParams(lower_to_params(L))
