"""Error metrics and the versioned metrics CSV.

The CSV starts with the literal line ``schema=1`` followed by a header and
one row per evaluation time. Floats are written with repr (shortest
round-trip form), so identically seeded runs produce byte-identical files.
Wall time is tracked on MetricsRow for the run summary but deliberately kept
out of the CSV body: the file must be reproducible byte-for-byte.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np

from ..errors import InputError

SCHEMA_LINE = "schema=1"
CSV_COLUMNS = (
    "t",
    "rel_l2_error",
    "residual_norm",
    "retained_rank",
    "sigma_max",
    "sigma_min_retained",
    "momentum_norm",
)


@dataclass
class MetricsRow:
    t: float
    rel_l2_error: float
    residual_norm: float
    retained_rank: int
    sigma_max: float
    sigma_min_retained: float
    momentum_norm: float
    wall_time_ms: float = 0.0

    def csv_cells(self):
        return (
            repr(float(self.t)),
            repr(float(self.rel_l2_error)),
            repr(float(self.residual_norm)),
            str(int(self.retained_rank)),
            repr(float(self.sigma_max)),
            repr(float(self.sigma_min_retained)),
            repr(float(self.momentum_norm)),
        )


def relative_l2_arrays(approx, truth):
    approx = np.asarray(approx, dtype=float).reshape(-1)
    truth = np.asarray(truth, dtype=float).reshape(-1)
    if approx.shape != truth.shape:
        raise InputError(
            f"shapes differ: approx {approx.shape} vs truth {truth.shape}"
        )
    denom = np.linalg.norm(truth)
    if denom == 0.0:
        raise InputError("relative L2 error undefined: reference field is zero")
    return float(np.linalg.norm(approx - truth) / denom)


def relative_l2(approx, truth):
    """Relative L2 distance between two fields on the same grid."""
    if len(approx.axes) != len(truth.axes) or any(
        not np.array_equal(a, b) for a, b in zip(approx.axes, truth.axes)
    ):
        raise InputError("fields live on different grids")
    return relative_l2_arrays(approx.values, truth.values)


def render_metrics_csv(rows):
    lines = [SCHEMA_LINE, ",".join(CSV_COLUMNS)]
    lines.extend(",".join(row.csv_cells()) for row in rows)
    return "\n".join(lines) + "\n"


def atomic_write_text(path, text):
    """Write via a sibling temp file and rename, so a crash never leaves a
    partial file at the destination."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_metrics_csv(path, rows):
    atomic_write_text(path, render_metrics_csv(rows))
