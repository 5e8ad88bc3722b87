"""Deterministic CSV emission: UTF-8, LF line endings, 12 significant digits."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .correlations import CorrelationSeries
from .lindblad import Trajectory

TRAJECTORY_COLUMNS = ("ct", "p11", "p22", "p33", "p44", "trace_drift", "min_eig")
CORRELATION_COLUMNS = ("ct", "eof", "discord2", "discord4", "mutual_info")


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if v == 0.0:
        return "0"  # drops the sign of -0.0
    return format(v, ".12g")


class RowWriter:
    """Streams rows to ``path``, flushing after every row."""

    def __init__(self, path: Path, columns: Sequence[str]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self.columns = list(columns)
        self._writer.writerow(self.columns)

    def write(self, row: dict) -> None:
        self._writer.writerow([fmt(row[c]) for c in self.columns])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_rows(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")
    return path


def write_trajectory(path: Path, traj: Trajectory) -> Path:
    rows = (
        (traj.ct[i], *traj.populations[i], traj.trace_drift[i], traj.min_eig[i])
        for i in range(len(traj.t))
    )
    return write_rows(path, TRAJECTORY_COLUMNS, rows)


def write_correlations(path: Path, series: CorrelationSeries) -> Path:
    rows = zip(series.ct, series.eof, series.discord_2, series.discord_4, series.mutual_info)
    return write_rows(path, CORRELATION_COLUMNS, rows)


def write_map(path: Path, eta_grid, dphi_grid, values: np.ndarray) -> Path:
    rows = ((eta, dphi, values[a, b]) for a, eta in enumerate(eta_grid) for b, dphi in enumerate(dphi_grid))
    return write_rows(path, ("eta_d", "delta_phi", "abs_F"), rows)
