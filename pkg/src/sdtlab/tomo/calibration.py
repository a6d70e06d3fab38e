"""Relative measurement-efficiency calibration of Bob's detectors."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import CalibrationError
from ..optics import measurement_vectors, settings_for_36, support_overlap
from .model import CountRecord, EfficiencyCalibration


def _matching_cells(settings, tol=1e-9):
    """(setting, detector, reference_setting) triples where detector j of
    ``setting`` sees the same state that B1 sees in ``reference_setting``."""
    b1_vectors = [measurement_vectors(s)[0] for s in settings]
    cells = []
    for si, s in enumerate(settings):
        for dj, v in enumerate(measurement_vectors(s)):
            if dj == 0:
                continue
            for ri, ref in enumerate(b1_vectors):
                unit = ref / np.linalg.norm(ref)
                if support_overlap(v, unit) > 1 - tol:
                    # weights account for polarizer loss in the model operators
                    cells.append((si, dj, ri, np.vdot(v, v).real, np.vdot(ref, ref).real))
                    break
    return cells


def calibrate_efficiencies(
    calibration_runs: Sequence[Sequence[CountRecord]],
    settings=None,
) -> EfficiencyCalibration:
    """Average, over runs, of the per-run mean ratio counts(Bj)/counts(B1)
    over setting pairs where both detectors project onto the same state.

    Counts are summed over Alice's detectors and normalized by duration and
    by the model operator norm.
    """
    if not calibration_runs:
        raise CalibrationError("need at least one calibration run")
    settings = settings or settings_for_36()
    cells = _matching_cells(settings)
    per_run = []
    for run in calibration_runs:
        by_setting = {rec.setting_index - 1: rec for rec in run}
        sums = {j: [] for j in (1, 2, 3)}
        for si, dj, ri, w_cell, w_ref in cells:
            if si not in by_setting or ri not in by_setting:
                continue
            rec, ref = by_setting[si], by_setting[ri]
            n_ref = ref.coincidences[:, 0].sum()
            if n_ref == 0:
                raise CalibrationError(
                    f"zero B1 counts in reference setting {ri + 1}; cannot calibrate"
                )
            n_cell = rec.coincidences[:, dj].sum()
            ratio = (n_cell / (rec.duration * w_cell)) / (n_ref / (ref.duration * w_ref))
            sums[dj].append(ratio)
        if any(not v for v in sums.values()):
            raise CalibrationError("calibration run lacks matching settings for some detector")
        per_run.append([1.0] + [float(np.mean(sums[j])) for j in (1, 2, 3)])
    ratios = np.mean(per_run, axis=0)
    return EfficiencyCalibration(ratios)

