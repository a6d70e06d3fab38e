"""Phase-space grid sweeps and count-budget curves."""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from ..errors import ValidationError
from ..qcore import phase_error_stats
from ..tomo.bme import SamplerConfig
from .encoder import LCEncoder
from .source import SourceModel
from .trial import TrialConfig, TrialResult, run_sdt_trial


def derive_seed(master: int, *keys: int) -> int:
    """Child seed for ``keys`` under ``master``.

    Splitting rule: ``SeedSequence(master, spawn_key=keys)``, first 63 bits.
    Independent of execution order, so sweeps may run in parallel.
    """
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def grid_points(step_deg: float) -> list[tuple[float, float, float]]:
    """All (phi1, phi2, phi3) triples on a grid of ``step_deg`` (degrees)."""
    if not 0 < step_deg <= 360:
        raise ValidationError("step must lie in (0, 360] degrees")
    n = 360.0 / step_deg
    if abs(n - round(n)) > 1e-9:
        raise ValidationError(f"step {step_deg} deg does not divide 360 deg")
    axis = [k * step_deg for k in range(int(round(n)))]
    return list(itertools.product(axis, axis, axis))


def default_repeats(step_deg: float) -> int:
    return 8 if abs(step_deg - 90.0) < 1e-9 else 1


@dataclass(frozen=True)
class SweepResult:
    step_deg: float
    repeats: int
    points: tuple[tuple[float, float, float], ...]
    trials: tuple[TrialResult, ...]  # point-major, repeat-minor

    @property
    def mean_fidelity(self) -> float:
        return float(np.mean([t.mean_fidelity for t in self.trials]))

    @property
    def fidelity_std(self) -> float:
        return float(np.std([t.mean_fidelity for t in self.trials]))

    def all_deltas(self) -> np.ndarray:
        """Delta-phi (radians), shape (n_trials * 4, 3)."""
        return np.concatenate([t.deltas() for t in self.trials])

    def phase_stats(self) -> tuple[float, float]:
        """Circular mean and std (degrees) of Delta-phi, averaged over the three phases."""
        d = self.all_deltas()
        stats = [phase_error_stats(col[np.isfinite(col)]) for col in d.T]
        return float(np.mean([s[0] for s in stats])), float(np.mean([s[1] for s in stats]))

    def rows(self) -> list[dict]:
        """One row per grid point, repeat and Alice outcome."""
        out = []
        for k, trial in enumerate(self.trials):
            point = self.points[k // self.repeats]
            for o in trial.outcomes:
                meas = np.asarray(point) + np.degrees(o.delta_phases)
                out.append(
                    {
                        "phi1_tar_deg": point[0], "phi2_tar_deg": point[1], "phi3_tar_deg": point[2],
                        "repeat": k % self.repeats,
                        "outcome": o.outcome,
                        "phi1_meas_deg": float(np.mod(meas[0], 360.0)),
                        "phi2_meas_deg": float(np.mod(meas[1], 360.0)),
                        "phi3_meas_deg": float(np.mod(meas[2], 360.0)),
                        "dphi1_deg": float(np.degrees(o.delta_phases[0])),
                        "dphi2_deg": float(np.degrees(o.delta_phases[1])),
                        "dphi3_deg": float(np.degrees(o.delta_phases[2])),
                        "fidelity": o.fidelity,
                    }
                )
        return out


def _run_point(args):
    point, source, config, seed = args
    enc = LCEncoder.for_target(np.radians(point))
    return run_sdt_trial(enc, source, config, seed)


def phase_grid_sweep(
    step_deg: float,
    source: Optional[SourceModel] = None,
    config: Optional[TrialConfig] = None,
    seed: int = 0,
    *,
    repeats: Optional[int] = None,
    workers: int = 1,
) -> SweepResult:
    """Run one trial per grid point and repeat; trial (p, r) uses
    ``derive_seed(seed, p, r)``."""
    source = source or SourceModel()
    config = config or TrialConfig()
    repeats = default_repeats(step_deg) if repeats is None else int(repeats)
    if repeats < 1:
        raise ValidationError("repeats must be at least 1")
    points = grid_points(step_deg)
    jobs = [
        (p, source, config, derive_seed(seed, i, r))
        for i, p in enumerate(points)
        for r in range(repeats)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(_run_point, jobs, chunksize=8))
    else:
        trials = [_run_point(j) for j in jobs]
    return SweepResult(float(step_deg), repeats, tuple(points), tuple(trials))


def fidelity_vs_counts_curve(
    source: Optional[SourceModel] = None,
    config: Optional[TrialConfig] = None,
    count_levels: Sequence[float] = (100, 300, 1000, 3000, 10000),
    trials_per_level: int = 10,
    seed: int = 0,
    *,
    sampler: Optional[SamplerConfig] = None,
    estimators: Sequence[str] = ("mle", "bme"),
) -> list[dict]:
    """Mean fidelity per estimator and phase error versus count level.

    A count level is the expected total coincidences of one conditional
    36-setting tomography. Trial t at level index i encodes random phases
    and draws counts from ``derive_seed(seed, i, t)``; both estimators see
    the same counts. Values are averaged over the four Alice outcomes and
    over trials; the phase error is the circular std of Delta-phi averaged
    over the three phases (from the MLE reconstructions).
    """
    source = source or SourceModel()
    config = config or TrialConfig()
    if any(not lvl > 0 for lvl in count_levels):
        raise ValidationError("count levels must be positive")
    rows = []
    for i, level in enumerate(count_levels):
        acc = {est: {"fid": [], "pur": []} for est in estimators}
        deltas = []
        for t in range(trials_per_level):
            s = derive_seed(seed, i, t)
            rng = np.random.default_rng(s)
            enc = LCEncoder.for_target(rng.uniform(0, 2 * np.pi, 3))
            for est in estimators:
                cfg = replace(
                    config,
                    counts_per_tomography=float(level),
                    estimator=est,
                    sampler=replace(sampler, seed=s) if sampler else None,
                )
                trial = run_sdt_trial(enc, source, cfg, s)
                acc[est]["fid"].append(trial.mean_fidelity)
                acc[est]["pur"].append(trial.mean_purity)
                if est == estimators[0]:
                    deltas.append(trial.deltas())
        d = np.concatenate(deltas)
        phase_err = float(np.mean([phase_error_stats(c[np.isfinite(c)])[1] for c in d.T]))
        row = {"counts": float(level)}
        for est in estimators:
            row[f"{est}_fidelity"] = float(np.mean(acc[est]["fid"]))
            row[f"{est}_purity"] = float(np.mean(acc[est]["pur"]))
        row["phase_error_deg"] = phase_err
        rows.append(row)
    return rows
