"""File formats shared by the library and the CLI.

Density operator (JSON text object)::

    {"format": "sdtlab-density", "version": 1, "dim": 4,
     "re": [row-major real parts], "im": [row-major imaginary parts],
     "basis": [...optional labels...], "meta": {...optional run metadata...}}

Count file (CSV, header mandatory)::

    setting_index,duration_s,A1,A2,A3,A4,B1,B2,B3,B4,A1B1,A1B2,...,A4B4

one row per tomography setting; ``AiBj`` is the coincidence count of Alice
detector i with Bob detector j.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError
from .qcore import DensityOperator, default_labels
from .tomo.model import CountRecord

DENSITY_FORMAT = "sdtlab-density"
DENSITY_VERSION = 1

SINGLES_COLUMNS = tuple(f"A{i}" for i in range(1, 5)) + tuple(f"B{j}" for j in range(1, 5))
COINC_COLUMNS = tuple(f"A{i}B{j}" for i in range(1, 5) for j in range(1, 5))
COUNT_COLUMNS = ("setting_index", "duration_s") + SINGLES_COLUMNS + COINC_COLUMNS


def density_to_dict(rho: DensityOperator, meta: dict | None = None) -> dict:
    m = rho.matrix
    out = {
        "format": DENSITY_FORMAT,
        "version": DENSITY_VERSION,
        "dim": int(m.shape[0]),
        "re": [float(x) for x in m.real.ravel()],
        "im": [float(x) for x in m.imag.ravel()],
        "basis": list(default_labels(m.shape[0])),
    }
    if meta:
        out["meta"] = meta
    return out


def density_from_dict(obj: dict) -> DensityOperator:
    for key in ("dim", "re", "im"):
        if key not in obj:
            raise ParseError(f"density object missing field '{key}'")
    dim = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    if re.size != dim * dim or im.size != dim * dim:
        raise ParseError(f"density object has {re.size}/{im.size} entries for dim {dim}")
    return DensityOperator((re + 1j * im).reshape(dim, dim))


def write_density(path, rho: DensityOperator, meta: dict | None = None) -> None:
    Path(path).write_text(json.dumps(density_to_dict(rho, meta), indent=1) + "\n")


def read_density(path) -> DensityOperator:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return density_from_dict(obj)


def format_counts(records: Iterable[CountRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COUNT_COLUMNS)
    for rec in records:
        w.writerow(
            [rec.setting_index, f"{rec.duration:g}", *rec.singles.tolist(), *rec.coincidences.ravel().tolist()]
        )
    return buf.getvalue()


def write_counts(path, records: Iterable[CountRecord]) -> None:
    Path(path).write_text(format_counts(records))


def parse_counts(text: str) -> list[CountRecord]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("count file is empty", line=1) from None
    missing = [c for c in COUNT_COLUMNS if c not in header]
    if missing:
        raise ParseError(f"count file header is missing column '{missing[0]}'", line=1, column=missing[0])
    pos = {name: header.index(name) for name in COUNT_COLUMNS}
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
        try:
            idx = int(row[pos["setting_index"]])
            dur = float(row[pos["duration_s"]])
            singles = [int(row[pos[c]]) for c in SINGLES_COLUMNS]
            coinc = [int(row[pos[c]]) for c in COINC_COLUMNS]
        except ValueError as exc:
            raise ParseError(f"non-numeric field: {exc}", line=lineno) from None
        try:
            records.append(CountRecord(idx, dur, singles, np.reshape(coinc, (4, 4))))
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    return records


def read_counts(path) -> list[CountRecord]:
    return parse_counts(Path(path).read_text())


def format_table(rows: Sequence[dict], fmt: str = "csv") -> str:
    """Render a list of flat dicts as CSV or JSON (column order from the first row)."""
    if fmt == "json":
        return json.dumps(list(rows), indent=1, default=_json_default) + "\n"
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt_cell(v) for k, v in r.items()})
    return buf.getvalue()


def _fmt_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def read_table(path) -> list[dict]:
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        return json.loads(text)
    return list(csv.DictReader(io.StringIO(text)))
