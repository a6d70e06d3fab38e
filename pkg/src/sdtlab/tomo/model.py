"""Count records, efficiency calibration and the linear forward model."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import DimensionMismatchError, ModelError, ValidationError
from ..optics import JointSetting, TomographySetting, build_projector_set
from ..qcore import as_density


@dataclass(frozen=True)
class CountRecord:
    """Counts for one tomography setting.

    ``singles`` holds Alice's four detectors then Bob's four;
    ``coincidences[a, b]`` counts Alice detector a+1 with Bob detector b+1.
    """

    setting_index: int
    duration: float
    singles: np.ndarray
    coincidences: np.ndarray

    def __post_init__(self):
        singles = np.asarray(self.singles, dtype=np.int64).reshape(-1)
        coinc = np.asarray(self.coincidences, dtype=np.int64).reshape(4, 4)
        if singles.size != 8:
            raise DimensionMismatchError("singles must have 8 entries (A1..A4, B1..B4)")
        if (singles < 0).any() or (coinc < 0).any():
            raise ValidationError("counts must be non-negative")
        if not self.duration > 0:
            raise ValidationError("duration must be positive")
        if self.setting_index < 1:
            raise ValidationError("setting_index is 1-based")
        for arr in (singles, coinc):
            arr.setflags(write=False)
        object.__setattr__(self, "singles", singles)
        object.__setattr__(self, "coincidences", coinc)

    @property
    def total_coincidences(self) -> int:
        return int(self.coincidences.sum())


@dataclass(frozen=True)
class EfficiencyCalibration:
    """Relative detection efficiencies of Bob's detectors, B1 fixed to 1.

    ``per_setting`` (shape (n_settings, 4)), when given, overrides ``ratios``.
    """

    ratios: np.ndarray = field(default_factory=lambda: np.ones(4))
    per_setting: Optional[np.ndarray] = None

    def __post_init__(self):
        r = np.asarray(self.ratios, dtype=float).reshape(-1)
        if r.size != 4:
            raise DimensionMismatchError("need four detector ratios")
        if (r <= 0).any():
            raise ValidationError("efficiency ratios must be positive")
        object.__setattr__(self, "ratios", r)
        if self.per_setting is not None:
            ps = np.asarray(self.per_setting, dtype=float)
            if ps.ndim != 2 or ps.shape[1] != 4 or (ps <= 0).any():
                raise ValidationError("per_setting ratios must be positive with shape (n, 4)")
            object.__setattr__(self, "per_setting", ps)

    def for_setting(self, index0: int) -> np.ndarray:
        if self.per_setting is not None:
            return self.per_setting[index0]
        return self.ratios

    @classmethod
    def ideal(cls) -> "EfficiencyCalibration":
        return cls(np.ones(4))


class DenseModel:
    """Expected counts n_k = w_k Tr(M_k rho) for an explicit operator list."""

    def __init__(self, operators: np.ndarray, weights: np.ndarray):
        ops = np.asarray(operators, dtype=complex)
        self.dim = ops.shape[-1]
        self.operators = ops
        self.weights = np.asarray(weights, dtype=float).reshape(-1)
        if self.weights.size != ops.shape[0]:
            raise DimensionMismatchError("one weight per operator is required")
        weighted = ops * self.weights[:, None, None]
        # Tr(M rho) = sum_ij M_ji rho_ij
        self._design = np.swapaxes(weighted, 1, 2).reshape(ops.shape[0], -1)
        self._adj = weighted.reshape(ops.shape[0], -1)

    @property
    def n_outcomes(self) -> int:
        return self.weights.size

    def expected(self, rho: np.ndarray) -> np.ndarray:
        """Batch-aware: ``rho`` of shape (..., d, d) gives (..., K)."""
        flat = rho.reshape(rho.shape[:-2] + (-1,))
        return (flat @ self._design.T).real

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        """sum_k g_k w_k M_k."""
        return (g @ self._adj).reshape(self.dim, self.dim)


class KroneckerModel:
    """Joint two-photon model with product operators A_a (x) B_b.

    ``weights`` has shape (Na, Nb); outcome k enumerates (a, b) row-major.
    """

    def __init__(self, ops_a: np.ndarray, ops_b: np.ndarray, weights: np.ndarray):
        self.ops_a = np.asarray(ops_a, dtype=complex)
        self.ops_b = np.asarray(ops_b, dtype=complex)
        self.weights = np.asarray(weights, dtype=float)
        da, db = self.ops_a.shape[-1], self.ops_b.shape[-1]
        self.dims = (da, db)
        self.dim = da * db
        if self.weights.shape != (self.ops_a.shape[0], self.ops_b.shape[0]):
            raise DimensionMismatchError("weights must have shape (Na, Nb)")

    @property
    def n_outcomes(self) -> int:
        return self.weights.size

    def expected(self, rho: np.ndarray) -> np.ndarray:
        da, db = self.dims
        r = rho.reshape(da, db, da, db)  # [j, l, i, k] in rho[(jl),(ik)]
        x = np.einsum("bkl,jlik->bji", self.ops_b, r, optimize=True)
        p = np.einsum("aij,bji->ab", self.ops_a, x, optimize=True).real
        return (p * self.weights).reshape(-1)

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        gw = g.reshape(self.weights.shape) * self.weights
        y = np.einsum("ab,bkl->akl", gw, self.ops_b, optimize=True)
        da, db = self.dims
        return np.einsum("aij,akl->ikjl", self.ops_a, y, optimize=True).reshape(self.dim, self.dim)


def _single_side_ops(settings: Sequence[TomographySetting]) -> np.ndarray:
    return np.stack([build_projector_set(s).stacked() for s in settings])


def conditional_model(
    counts: Sequence[CountRecord],
    settings: Sequence[TomographySetting],
    calib: Optional[EfficiencyCalibration] = None,
    alice_outcome: int = 1,
) -> tuple[DenseModel, np.ndarray]:
    """Model and data for Bob's state conditioned on one Alice detector."""
    calib = calib or EfficiencyCalibration.ideal()
    ops_all = _single_side_ops(settings)
    ops, weights, data = [], [], []
    for rec in counts:
        s = rec.setting_index - 1
        if s >= len(settings):
            raise DimensionMismatchError(
                f"setting index {rec.setting_index} exceeds the {len(settings)}-setting catalog"
            )
        ops.append(ops_all[s])
        weights.append(rec.duration * calib.for_setting(s))
        data.append(rec.coincidences[alice_outcome - 1])
    model = DenseModel(np.concatenate(ops), np.concatenate(weights))
    return model, np.concatenate(data).astype(float)


def joint_model(
    counts: Sequence[CountRecord],
    settings: Sequence[JointSetting],
    calib_bob: Optional[EfficiencyCalibration] = None,
    calib_alice: Optional[EfficiencyCalibration] = None,
) -> tuple[KroneckerModel, np.ndarray]:
    """Model and data for the full two-photon tomography."""
    calib_bob = calib_bob or EfficiencyCalibration.ideal()
    calib_alice = calib_alice or EfficiencyCalibration.ideal()
    a_settings = sorted({(j.alice_index, j.alice) for j in settings}, key=lambda x: x[0])
    b_settings = sorted({(j.bob_index, j.bob) for j in settings}, key=lambda x: x[0])
    a_pos = {idx: n for n, (idx, _) in enumerate(a_settings)}
    b_pos = {idx: n for n, (idx, _) in enumerate(b_settings)}
    ops_a = _single_side_ops([s for _, s in a_settings]).reshape(-1, 4, 4)
    ops_b = _single_side_ops([s for _, s in b_settings]).reshape(-1, 4, 4)
    na, nb = len(a_settings), len(b_settings)
    weights = np.zeros((na, 4, nb, 4))
    data = np.zeros((na, 4, nb, 4))
    for rec in counts:
        if rec.setting_index > len(settings):
            raise DimensionMismatchError(
                f"setting index {rec.setting_index} exceeds the {len(settings)}-setting catalog"
            )
        js = settings[rec.setting_index - 1]
        ia, ib = a_pos[js.alice_index], b_pos[js.bob_index]
        ra = calib_alice.for_setting(js.alice_index - 1)
        rb = calib_bob.for_setting(js.bob_index - 1)
        weights[ia, :, ib, :] = rec.duration * np.outer(ra, rb)
        data[ia, :, ib, :] = rec.coincidences
    model = KroneckerModel(ops_a, ops_b, weights.reshape(na * 4, nb * 4))
    return model, data.reshape(-1)


def predict_coincidences(
    rho,
    settings: Sequence[TomographySetting],
    total_pairs: float,
    calib: Optional[EfficiencyCalibration] = None,
) -> np.ndarray:
    """Expected counts, shape (n_settings, 4):
    total_pairs * duration_scale * ratio_j * Tr(M_ij rho)."""
    calib = calib or EfficiencyCalibration.ideal()
    m = as_density(rho).matrix
    ops = _single_side_ops(settings)
    probs = np.einsum("sdij,ji->sd", ops, m).real
    scale = np.array([s.duration_scale for s in settings])
    ratios = np.stack([calib.for_setting(i) for i in range(len(settings))])
    out = total_pairs * scale[:, None] * ratios * probs
    if out.min() < -1e-12:
        raise ModelError("forward model produced a negative expected count")
    return np.clip(out, 0.0, None)
