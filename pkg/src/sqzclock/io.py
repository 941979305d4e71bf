"""CSV exchange formats.

Floats are written with 17 significant digits, which round-trips every
IEEE double exactly.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .allan import AllanSeries
from .sequence import SHOT_FIELDS, ShotRecord

SERIES_COLUMNS = ("time_s", "value")
ALLAN_COLUMNS = ("tau_s", "adev", "ci_low", "ci_high")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    try:
        data = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric value ({exc})") from None
    if data.size == 0:
        data = data.reshape(0, len(header))
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: rows do not match the header")
    return header, data


def _columns(path, required) -> dict[str, np.ndarray]:
    header, data = read_csv(path)
    missing = [c for c in required if c not in header]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    return {name: data[:, header.index(name)] for name in header}


def write_series(path, times, values) -> Path:
    return write_csv(path, SERIES_COLUMNS, zip(times, values))


def read_series(path) -> tuple[np.ndarray, np.ndarray]:
    cols = _columns(path, SERIES_COLUMNS)
    return cols["time_s"], cols["value"]


def write_allan(path, series: AllanSeries) -> Path:
    return write_csv(path, ALLAN_COLUMNS,
                     zip(series.taus, series.adev, series.ci_low, series.ci_high))


def read_allan(path) -> dict[str, np.ndarray]:
    cols = _columns(path, ALLAN_COLUMNS)
    return {k: cols[k] for k in ALLAN_COLUMNS}


def write_shots(path, records) -> Path:
    return write_csv(path, SHOT_FIELDS, ([getattr(r, f) for f in SHOT_FIELDS] for r in records))


def read_shots(path) -> list[ShotRecord]:
    cols = _columns(path, SHOT_FIELDS)
    n = len(cols["cycle_index"])
    out = []
    for i in range(n):
        kw = {f: float(cols[f][i]) for f in SHOT_FIELDS}
        kw["cycle_index"] = int(kw["cycle_index"])
        out.append(ShotRecord(**kw))
    return out


def is_shot_table(path) -> bool:
    header, _ = read_csv(path)
    return all(f in header for f in ("jz_final_A", "jz_final_B", "timestamp"))


def finite_or_none(x):
    """JSON-friendly float (NaN and inf become ``None``)."""
    x = float(x)
    return x if math.isfinite(x) else None
