"""Figure rendering for CLI reports (written to files, never shown)."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

STYLE = {
    "axes.labelsize": 9,
    "font.size": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "font.family": "serif",
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def figsize(scale: float = 1.0, ratio: float = GOLDEN) -> tuple[float, float]:
    width = 5.0 * scale
    return width, width * ratio


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_density(rho: np.ndarray, path, title: str = "") -> Path:
    """Real and imaginary parts as side-by-side heat maps."""
    m = np.asarray(rho)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=figsize(1.2, 0.45))
        lim = max(np.abs(m.real).max(), np.abs(m.imag).max(), 1e-12)
        for ax, part, name in zip(axes, (m.real, m.imag), ("Re", "Im")):
            im = ax.imshow(part, cmap="RdBu_r", vmin=-lim, vmax=lim)
            ax.set_title(f"{name} {title}".strip())
            ax.set_xticks(range(m.shape[0]))
            ax.set_yticks(range(m.shape[0]))
        fig.colorbar(im, ax=axes, shrink=0.8)
        return _save(fig, path)


def plot_sweep(rows: Sequence[dict], path) -> Path:
    """Delta-phi histograms per phase and the fidelity distribution."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=figsize(1.4, 0.4))
        bins = np.linspace(-45, 45, 37)
        for i in (1, 2, 3):
            d = np.array([float(r[f"dphi{i}_deg"]) for r in rows])
            axes[0].hist(d[np.isfinite(d)], bins=bins, histtype="step", label=f"$\\Delta\\phi_{i}$")
        axes[0].set_xlabel("phase error (deg)")
        axes[0].set_ylabel("count")
        axes[0].legend(frameon=False)
        f = [float(r["fidelity"]) for r in rows]
        axes[1].hist(f, bins=30, color="0.4")
        axes[1].set_xlabel("fidelity")
        return _save(fig, path)


def plot_link(rows: Sequence[dict], path) -> Path:
    """Coincidences per pass (left axis) and min/max range (right axis) vs max elevation."""
    e = [float(r["max_elevation_deg"]) for r in rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        ax.semilogy(e, [float(r["total_coincidences"]) for r in rows], "k-", label="coincidences")
        ax.set_xlabel("max elevation (deg)")
        ax.set_ylabel("coincidences per pass")
        ax2 = ax.twinx()
        ax2.plot(e, [float(r["min_range_m"]) for r in rows], "r--", label="min range")
        ax2.plot(e, [float(r["max_range_m"]) for r in rows], "b:", label="max range")
        ax2.set_ylabel("range (m)")
        ax2.legend(frameon=False, loc="center right")
        return _save(fig, path)


def plot_stabilization(trace, path) -> Path:
    """Disturbance and residual phase versus time."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(2, 1, figsize=figsize(1.0, 0.9), sharex=True)
        axes[0].plot(trace.t, trace.disturbance, "k-", lw=0.8)
        axes[0].set_ylabel("disturbance (rad)")
        axes[1].plot(trace.t, np.degrees(trace.residual), "b-", lw=0.5)
        axes[1].set_ylabel("residual (deg)")
        axes[1].set_xlabel("time (s)")
        return _save(fig, path)


def plot_curve(rows: Sequence[dict], path) -> Path:
    """Fidelity per estimator and phase error versus counts per tomography."""
    n = [float(r["counts"]) for r in rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        for key, style in (("mle_fidelity", "ko-"), ("bme_fidelity", "rs--")):
            if key in rows[0]:
                ax.semilogx(n, [float(r[key]) for r in rows], style, label=key.split("_")[0].upper())
        ax.set_xlabel("coincidences per tomography")
        ax.set_ylabel("fidelity")
        ax.legend(frameon=False, loc="lower right")
        ax2 = ax.twinx()
        ax2.semilogx(n, [float(r["phase_error_deg"]) for r in rows], "b:", label="phase error")
        ax2.set_ylabel("phase error (deg)")
        return _save(fig, path)
