"""Command-line interface.

Exit codes: 0 success, 2 usage/configuration, 3 data or parse error,
4 convergence failure or loop instability. Errors are also written to
stderr as a one-line JSON object.

Configuration is a JSON file (``--config`` or $SDTLAB_CONFIG) with optional
sections ``source``, ``trial``, ``orbit``, ``link``, ``pi``, ``sampler``
plus top-level ``seed`` and ``budget``. Flags override the file, which
overrides built-in defaults.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import (
    CalibrationError,
    ConfigurationError,
    ConvergenceError,
    DegenerateStateError,
    DimensionMismatchError,
    InstabilityError,
    ModelError,
    ParseError,
    SDTError,
    ValidationError,
)
from .formats import format_counts, format_table, read_counts, write_density
from .optics import load_settings_file, settings_for_36
from .qcore import (
    ALICE_OUTCOMES,
    DensityOperator,
    UndefinedPhaseError,
    correction_unitary,
    extract_phases,
    fidelity,
    make_equimodular_ket,
    purity,
)

log = logging.getLogger("sdtlab")

CONFIG_ENV = "SDTLAB_CONFIG"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
FEASIBLE_PASS_COUNTS = 300


class UsageError(SDTError):
    pass


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ConvergenceError, InstabilityError)):
        return EXIT_NUMERIC
    if isinstance(exc, (ParseError, DimensionMismatchError, CalibrationError, DegenerateStateError,
                        ModelError, OSError)):
        return EXIT_DATA
    if isinstance(exc, (UsageError, ConfigurationError, ValidationError)):
        return EXIT_USAGE
    return EXIT_DATA


def _error_object(exc: BaseException) -> dict:
    obj = {"error": type(exc).__name__, "message": str(exc)}
    for key in ("line", "column"):
        val = getattr(exc, key, None)
        if val is not None:
            obj[key] = val
    return obj


# configuration ---------------------------------------------------------------

def load_config(path: Optional[str]) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON ({exc.msg}, line {exc.lineno})") from None
    if not isinstance(cfg, dict):
        raise ConfigurationError("config must be a JSON object")
    return cfg


def _build(cls, section: dict, **overrides):
    """Instantiate a frozen dataclass from a config section plus flag overrides."""
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - names
    if unknown:
        raise ConfigurationError(f"unknown {cls.__name__} keys: {', '.join(sorted(unknown))}")
    kwargs = dict(section)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    for k, v in kwargs.items():
        if isinstance(v, list):
            kwargs[k] = tuple(v)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def _seed(args, cfg, required: bool = True) -> Optional[int]:
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None and required:
        raise UsageError(f"'{args.command}' is stochastic and needs --seed (or 'seed' in the config)")
    if seed is not None and not 0 <= int(seed) < 2**64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    return None if seed is None else int(seed)


# output ----------------------------------------------------------------------

class Emitter:
    def __init__(self, out: str, fmt: str, plot: bool):
        self.out = Path(out)
        self.fmt = fmt
        self.plot = plot
        self.out.mkdir(parents=True, exist_ok=True)

    def table(self, name: str, rows: Sequence[dict]) -> Path:
        path = self.out / f"{name}.{self.fmt}"
        path.write_text(format_table(rows, self.fmt))
        return path

    def summary(self, rows) -> None:
        rows = [rows] if isinstance(rows, dict) else list(rows)
        sys.stdout.write(format_table(rows, self.fmt))

    def figure(self, name: str, fn, *args) -> Optional[Path]:
        if not self.plot:
            return None
        return fn(*args, self.out / f"{name}.png")


def _budget(cfg: dict, name: Optional[str]):
    from .sdtsim import ideal_budget, lab_error_budget

    name = name or cfg.get("budget", "ideal")
    if name == "lab":
        return lab_error_budget()
    if name == "ideal":
        return ideal_budget()
    raise UsageError(f"unknown budget {name!r}; use 'lab' or 'ideal'")


def _source_and_trial(args, cfg):
    from .sdtsim import SourceModel, TrialConfig

    noiseless = getattr(args, "noiseless", False)
    budget = _budget(cfg, "ideal" if noiseless else getattr(args, "budget", None))
    base_source = dataclasses.asdict(budget.source())
    base_source.update(cfg.get("source", {}))
    source = _build(SourceModel, base_source)
    trial_cfg = dict(cfg.get("trial", {}))
    trial = _build(
        TrialConfig,
        trial_cfg,
        counts_per_tomography=getattr(args, "counts", None),
        noiseless=True if noiseless else None,
    )
    if not noiseless:
        # config values for the budget knobs win over the preset
        trial = dataclasses.replace(budget.apply(trial), **{
            k: v for k, v in trial_cfg.items()
            if k in ("lc_jitter_deg", "efficiency_mismatch", "polarizer_visibility")
        })
    return source, trial


# commands --------------------------------------------------------------------

def cmd_simulate(args, cfg, em: Emitter) -> int:
    from .sdtsim import LCEncoder
    from .sdtsim.counts import records_from_counts
    from .sdtsim.trial import simulate_trial_counts

    seed = _seed(args, cfg)
    source, trial = _source_and_trial(args, cfg)
    enc = LCEncoder.for_target(np.radians(args.phases))
    rng = np.random.default_rng(seed)
    _, drawn = simulate_trial_counts(enc, source, trial, rng)
    counts = np.rint(drawn).astype(np.int64)
    records = records_from_counts(counts, trial.catalog(), trial.duration)
    path = em.out / (args.output or "counts.csv")
    path.write_text(format_counts(records))
    em.summary({"counts_file": str(path), "phi1_deg": args.phases[0], "phi2_deg": args.phases[1],
                "phi3_deg": args.phases[2], "total_coincidences": int(counts.sum()), "seed": seed})
    return EXIT_OK


def _load_calib(path: Optional[str]):
    from .tomo import EfficiencyCalibration

    if not path:
        return None
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"calibration file is not valid JSON: {exc.msg}", line=exc.lineno) from None
    if "ratios" not in obj:
        raise ParseError("calibration file missing field 'ratios'")
    return EfficiencyCalibration(obj["ratios"], obj.get("per_setting"))


def cmd_tomo(args, cfg, em: Emitter) -> int:
    from .tomo import SamplerConfig, bme_reconstruct, mle_reconstruct, monte_carlo_errors

    if args.estimator == "bme" or args.mc:
        seed = _seed(args, cfg)
    else:
        seed = _seed(args, cfg, required=False) or 0
    counts = read_counts(args.count_file)
    settings = load_settings_file(args.settings) if args.settings else settings_for_36()
    calib = _load_calib(args.calib)
    target = make_equimodular_ket(np.radians(args.target)) if args.target else None
    outcomes = [args.outcome] if args.outcome else [o.index for o in ALICE_OUTCOMES]
    rows = []
    for a in outcomes:
        if args.estimator == "bme":
            sampler = _build(SamplerConfig, cfg.get("sampler", {}), seed=seed)
            res = bme_reconstruct(counts, settings, calib, sampler, alice_outcome=a)
        else:
            res = mle_reconstruct(counts, settings, calib, alice_outcome=a, seed=seed)
        rho = res.rho
        if args.correct:
            u = correction_unitary(ALICE_OUTCOMES[a - 1])
            rho = DensityOperator(u @ rho.matrix @ u.conj().T)
        row = {"outcome": a, "estimator": res.estimator, "purity": purity(rho),
               "log_likelihood": res.log_likelihood, "converged": res.converged}
        if target is not None:
            row["fidelity"] = fidelity(rho, target)
        try:
            ph = np.degrees(extract_phases(rho).as_array())
            row.update({"phi1_deg": ph[0], "phi2_deg": ph[1], "phi3_deg": ph[2]})
        except UndefinedPhaseError:
            row.update({"phi1_deg": None, "phi2_deg": None, "phi3_deg": None})
        if args.mc:
            bars = monte_carlo_errors(counts, settings, calib, args.mc, target,
                                      alice_outcome=a, seed=seed, init=res.params)
            row["purity_std"] = bars.purity_std
            if bars.fidelity_std is not None:
                row["fidelity_std"] = bars.fidelity_std
        for w in res.warnings:
            log.warning("outcome A%d: %s", a, w)
        write_density(em.out / f"rho_A{a}.json", rho, meta={**res.metadata(), "outcome": a})
        if em.plot:
            from .plotting import plot_density
            em.figure(f"rho_A{a}", plot_density, rho.matrix, f"A{a}")
        rows.append(row)
    em.table("tomo_metrics", rows)
    em.summary(rows)
    return EXIT_OK


def cmd_sweep(args, cfg, em: Emitter) -> int:
    from .sdtsim import phase_grid_sweep

    seed = _seed(args, cfg)
    source, trial = _source_and_trial(args, cfg)
    res = phase_grid_sweep(args.step, source, trial, seed, repeats=args.repeats, workers=args.workers)
    rows = res.rows()
    em.table("sweep", rows)
    if em.plot:
        from .plotting import plot_sweep
        em.figure("sweep", plot_sweep, rows)
    mean, std = res.phase_stats()
    em.summary({"step_deg": args.step, "grid_points": len(res.points), "repeats": res.repeats,
                "mean_fidelity": res.mean_fidelity, "fidelity_std": res.fidelity_std,
                "dphi_mean_deg": mean, "dphi_std_deg": std})
    return EXIT_OK


def cmd_curve(args, cfg, em: Emitter) -> int:
    from .sdtsim import fidelity_vs_counts_curve
    from .tomo import SamplerConfig

    seed = _seed(args, cfg)
    source, trial = _source_and_trial(args, cfg)
    sampler = _build(SamplerConfig, cfg.get("sampler", {}))
    rows = fidelity_vs_counts_curve(source, trial, args.levels, args.trials, seed, sampler=sampler)
    em.table("curve", rows)
    if em.plot:
        from .plotting import plot_curve
        em.figure("curve", plot_curve, rows)
    em.summary(rows)
    return EXIT_OK


def cmd_link(args, cfg, em: Emitter) -> int:
    from .spacelink import LinkBudget, OrbitConfig, pass_summary_curve

    if not args.elevations:
        raise UsageError("need at least one max elevation")
    orbit = _build(OrbitConfig, cfg.get("orbit", {}), altitude=args.altitude, min_elevation=args.min_elevation)
    budget = _build(
        LinkBudget, cfg.get("link", {}),
        receiver_loss_db=args.receiver_loss_db,
        ground_analysis_loss_db=args.ground_loss_db,
        space_analysis_loss_db=args.space_loss_db,
    )
    for e in args.elevations:
        if not orbit.min_elevation < e <= 90:
            raise UsageError(f"max elevation {e} outside ({orbit.min_elevation}, 90]")
    rows = pass_summary_curve(orbit, budget, args.elevations, args.dt)
    for r in rows:
        if r["total_coincidences"] < FEASIBLE_PASS_COUNTS:
            log.warning("pass with max elevation %.1f deg yields only %.0f coincidences (< %d)",
                        r["max_elevation_deg"], r["total_coincidences"], FEASIBLE_PASS_COUNTS)
    em.table("link", rows)
    if em.plot:
        from .plotting import plot_link
        em.figure("link", plot_link, rows)
    em.summary(rows)
    return EXIT_OK


def cmd_doppler(args, cfg, em: Emitter) -> int:
    from .spacelink import (
        OrbitConfig, PIConfig, doppler_swing, propagate_pass, reference_disturbance,
        simulate_pi_stabilization, stabilized_sdt_fidelity,
    )
    from .spacelink.doppler import C_LIGHT

    seed = _seed(args, cfg)
    orbit = _build(OrbitConfig, cfg.get("orbit", {}), min_elevation=args.min_elevation)
    kp, ki = args.gains if args.gains else (None, None)
    pi = _build(PIConfig, cfg.get("pi", {}), kp=kp, ki=ki, sensor_noise_std=args.noise)
    if pi.kp == 0 and pi.ki == 0:
        log.warning("zero gains: the loop passes the disturbance through unchanged")
    disturbance = reference_disturbance(orbit, args.max_elevation, pi.rate, tau_bin=args.tau_bin)
    closed = args.stabilization == "on"
    try:
        trace = simulate_pi_stabilization(disturbance, pi, seed, closed_loop=closed)
    except InstabilityError as exc:
        if exc.trace is not None:
            path = em.table("instability_trace", exc.trace.rows())
            exc.args = (f"{exc.args[0]}; diagnostic trace written to {path}",)
        raise
    em.table("doppler_trace", trace.rows())
    if em.plot:
        from .plotting import plot_stabilization
        em.figure("doppler_trace", plot_stabilization, trace)
    swing = doppler_swing(propagate_pass(orbit, args.max_elevation, 1.0 / pi.rate), args.tau_bin)
    summary = {
        "max_elevation_deg": args.max_elevation,
        "doppler_swing_fs": swing * 1e15,
        "path_length_swing_um": C_LIGHT * swing * 1e6,
        "stabilization": args.stabilization,
        "residual_std_deg": trace.residual_std_deg,
        "fringes_swept": trace.fringes_swept,
    }
    if args.sdt:
        source, trial = _source_and_trial(args, cfg)
        res = stabilized_sdt_fidelity(disturbance, pi, source, trial, seed, n_trials=args.sdt_trials)
        summary.update({"fidelity_on": res.fidelity_on, "fidelity_off": res.fidelity_off})
    em.summary(summary)
    return EXIT_OK


def _read_angles(path: str) -> np.ndarray:
    vals = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        field = line.split(",")[0].strip()
        if not field or field.startswith("#"):
            continue
        try:
            vals.append(float(field))
        except ValueError:
            if lineno == 1:
                continue  # header
            raise ParseError(f"not an angle: {field!r}", line=lineno) from None
    if not vals:
        raise ParseError(f"{path} contains no angles")
    return np.array(vals)


def cmd_ks(args, cfg, em: Emitter) -> int:
    from .sdtsim import ks_two_sample

    res = ks_two_sample(_read_angles(args.file1), _read_angles(args.file2), args.alpha)
    em.summary({"D": res.statistic, "threshold": res.threshold, "alpha": res.alpha,
                "reject": res.reject, "n1": res.n1, "n2": res.n2})
    return EXIT_OK


# parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (64-bit)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory (default: .)")
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS, help="table format")
    common.add_argument("--config", default=argparse.SUPPRESS, help=f"JSON config (default: ${CONFIG_ENV})")
    common.add_argument("--plot", action="store_true", default=argparse.SUPPRESS,
                        help="also render figures (PNG) next to the tables")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="sdtlab", description="Superdense-teleportation numerical lab.",
                                parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def sim_flags(sp):
        sp.add_argument("--budget", choices=("lab", "ideal"), help="imperfection preset")
        sp.add_argument("--counts", type=float, help="expected coincidences per conditional tomography")
        sp.add_argument("--noiseless", action="store_true", help="expected counts, no Poisson noise")

    s = sub.add_parser("simulate", parents=[common], help="generate a count file")
    s.add_argument("--phases", type=float, nargs=3, default=(0.0, 0.0, 0.0), metavar="DEG")
    s.add_argument("--output", help="count file name inside --out (default counts.csv)")
    sim_flags(s)

    t = sub.add_parser("tomo", parents=[common], help="reconstruct states from a count file")
    t.add_argument("count_file")
    t.add_argument("--settings", help="settings catalog file (default: built-in 36 settings)")
    t.add_argument("--calib", help="JSON efficiency calibration {\"ratios\": [...]}")
    t.add_argument("--estimator", choices=("mle", "bme"), default="mle")
    t.add_argument("--outcome", type=int, choices=(1, 2, 3, 4), help="one Alice outcome (default all)")
    t.add_argument("--target", type=float, nargs=3, metavar="DEG", help="target phases for fidelity")
    t.add_argument("--correct", action="store_true", help="apply Bob's correction before scoring")
    t.add_argument("--mc", type=int, default=0, metavar="N", help="Monte Carlo error bars with N resamples")

    w = sub.add_parser("sweep", parents=[common], help="phase-grid sweep")
    w.add_argument("--step", type=float, default=90.0, help="grid step in degrees")
    w.add_argument("--repeats", type=int, help="repeats per point (default 8 at 90 deg, else 1)")
    w.add_argument("--workers", type=int, default=1)
    sim_flags(w)

    c = sub.add_parser("curve", parents=[common], help="fidelity versus counts (MLE and BME)")
    c.add_argument("--levels", type=float, nargs="+", default=[100, 300, 1000, 3000, 10000])
    c.add_argument("--trials", type=int, default=10)
    sim_flags(c)

    lk = sub.add_parser("link", parents=[common], help="coincidences per pass")
    lk.add_argument("--elevations", type=float, nargs="*", default=[21, 25, 30, 40, 50, 60, 70, 80, 90])
    lk.add_argument("--altitude", type=float)
    lk.add_argument("--min-elevation", type=float)
    lk.add_argument("--receiver-loss-db", type=float)
    lk.add_argument("--ground-loss-db", type=float)
    lk.add_argument("--space-loss-db", type=float)
    lk.add_argument("--dt", type=float, default=1.0)

    d = sub.add_parser("doppler", parents=[common], help="Doppler ramp and PI stabilization")
    d.add_argument("--max-elevation", type=float, default=90.0)
    d.add_argument("--min-elevation", type=float)
    d.add_argument("--stabilization", choices=("on", "off"), default="on")
    d.add_argument("--gains", type=float, nargs=2, metavar=("KP", "KI"))
    d.add_argument("--noise", type=float, help="fractional photodiode noise")
    d.add_argument("--tau-bin", type=float, default=1.5e-9)
    d.add_argument("--sdt", action="store_true", help="also compare SDT fidelity with and without stabilization")
    d.add_argument("--sdt-trials", type=int, default=4)
    sim_flags(d)

    k = sub.add_parser("ks", parents=[common], help="two-sample KS test on angle files")
    k.add_argument("file1")
    k.add_argument("file2")
    k.add_argument("--alpha", type=float, default=0.05)
    return p


COMMANDS = {
    "simulate": cmd_simulate, "tomo": cmd_tomo, "sweep": cmd_sweep, "curve": cmd_curve,
    "link": cmd_link, "doppler": cmd_doppler, "ks": cmd_ks,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for name, default in (("seed", None), ("out", "."), ("format", "csv"), ("config", None),
                          ("plot", False), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        em = Emitter(args.out, args.format, args.plot)
        return COMMANDS[args.command](args, cfg, em)
    except (SDTError, ValueError, OSError) as exc:
        code = _exit_code(exc)
        sys.stderr.write(json.dumps(_error_object(exc)) + "\n")
        if code == EXIT_USAGE:
            parser.print_usage(sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
