"""CSV artifacts: grid-function snapshots, run diagnostics, study tables, verdicts."""

from __future__ import annotations

import csv
import os

import numpy as np

from .discrete_operator import GridFunction
from .errors import DomainError


def _g17(x):
    return "%.17g" % x


def write_grid_function(path, u: GridFunction):
    """Header ``x1,...,xN,u``, one row per lattice point in row-major order."""
    pts = u.points()
    vals = u.values.ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(u.dim)] + ["u"])
        for p, v in zip(pts, vals):
            w.writerow([_g17(x) for x in p] + [_g17(v)])


def read_grid_function(path, h=None, boundary="zero_extension") -> GridFunction:
    """Rebuild a grid function from a snapshot CSV (``h`` inferred when omitted)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    N = len(header) - 1
    if header != [f"x{i + 1}" for i in range(N)] + ["u"]:
        raise DomainError(f"{path}: unexpected header {header}")
    data = np.array(body, dtype=float).reshape(-1, N + 1)
    pts, vals = data[:, :N], data[:, N]
    axes = [np.unique(pts[:, k]) for k in range(N)]
    if h is None:
        steps = [np.diff(a) for a in axes if a.size > 1]
        if not steps:
            raise DomainError("cannot infer spacing from a single point; pass h")
        h = float(np.median(np.concatenate(steps)))
    shape = tuple(a.size for a in axes)
    if int(np.prod(shape)) != vals.size:
        raise DomainError(f"{path}: points do not form a full lattice box")
    lo = tuple(int(round(a[0] / h)) for a in axes)
    return GridFunction(h, lo, vals.reshape(shape), boundary)


def write_diagnostics(path, report):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "mass", "linf", "l1"])
        for row in zip(report.times, report.mass, report.linf, report.l1):
            w.writerow([_g17(x) for x in row])


def read_diagnostics(path):
    """Return a dict of column name -> float array."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ["t", "mass", "linf", "l1"]:
        raise DomainError(f"{path}: unexpected header {rows[0]}")
    data = np.array(rows[1:], dtype=float).reshape(-1, 4)
    return {k: data[:, i] for i, k in enumerate(rows[0])}


def snapshot_name(t):
    return f"snap_t{t:.6g}.csv"


def write_snapshots(directory, report):
    paths = []
    for t, u in report.snapshot_items():
        p = os.path.join(directory, snapshot_name(t))
        write_grid_function(p, u)
        paths.append(p)
    return paths


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_g17(x) if isinstance(x, (float, np.floating)) else x for x in r])


def read_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_verdicts(path, verdicts):
    with open(path, "w") as fh:
        for v in verdicts:
            fh.write(v.line() + "\n")
