"""Deterministic CSV and manifest output.

All numeric cells are rendered with %.17g so a rerun of the same config
and seed produces a byte-identical file body; wall-clock information is
confined to the manifest.  Field snapshots use (x, y, re, im) rows in
C order, kernel slices add the Gaussian envelope column, decay schedules
use (t, l1, l2, linf, boundary_mass), and every fit-producing experiment
writes a (t, value, model_value, residual) series next to a one-row
summary.
"""

from __future__ import annotations

import csv
import math
import time
from typing import Iterable, Optional

import numpy as np

from . import __version__
from .grid import lp_norm, boundary_mass

__all__ = [
    "format_cell",
    "write_csv",
    "write_manifest",
    "field_table",
    "kernel_table",
    "decay_table",
    "series_table",
    "fit_summary_table",
    "matrix_dump_table",
    "model_value",
]


def format_cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return "%d" % v
    return "%.17g" % float(v)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
    return path


def write_manifest(path, command, config_echo, extra=None, started=None):
    """Manifest = exact config echo + run metadata (the only timestamps)."""
    lines = ["[run]"]
    lines.append("command = %s" % command)
    lines.append("version = %s" % __version__)
    if started is not None:
        lines.append("started_unix = %.3f" % started)
        lines.append("wall_time_s = %.3f" % (time.time() - started))
    for key, val in (extra or {}).items():
        lines.append("%s = %s" % (key, val))
    lines.append("")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
        fh.write(config_echo)
    return path


def _mesh(spec):
    nodes = spec.nodes()
    return nodes.real, nodes.imag


def field_table(field):
    x, y = _mesh(field.spec)
    v = field.values
    rows = []
    n = field.spec.points
    for ix in range(n):
        for iy in range(n):
            rows.append((x[ix, iy], y[ix, iy], v[ix, iy].real, v[ix, iy].imag))
    return ("x", "y", "re", "im"), rows


def kernel_table(slice_):
    x, y = _mesh(slice_.field.spec)
    v = slice_.field.values
    env = slice_.envelope()
    rows = []
    n = slice_.field.spec.points
    for ix in range(n):
        for iy in range(n):
            rows.append((x[ix, iy], y[ix, iy],
                         v[ix, iy].real, v[ix, iy].imag, env[ix, iy]))
    return ("x", "y", "re", "im", "envelope"), rows


def decay_table(traj):
    rows = []
    for t, f in zip(traj.times, traj.fields):
        rows.append((t, lp_norm(f, 1), lp_norm(f, 2), lp_norm(f, math.inf),
                     boundary_mass(f)))
    return ("t", "l1", "l2", "linf", "boundary_mass"), rows


def model_value(fit, t):
    """Fitted model evaluated at time t."""
    if fit.model == "power_law":
        return fit.coefficient * t ** fit.exponent
    if fit.model == "exponential":
        return fit.coefficient * math.exp(-fit.rate * t)
    return fit.coefficient * t ** fit.exponent * math.exp(-fit.rate * t)


def series_table(times, values, fit=None):
    rows = []
    for t, v in zip(times, values):
        if fit is not None and t > 0:
            mv = model_value(fit, t)
            rows.append((t, v, mv, v - mv))
        else:
            rows.append((t, v, "", ""))
    return ("t", "value", "model_value", "residual"), rows


def fit_summary_table(fit):
    fitted = fit.rate if fit.model == "exponential" else fit.exponent
    dev = fit.rel_deviation
    row = (fit.model, fitted,
           "" if fit.target is None else fit.target,
           "" if dev is None else dev,
           fit.r_squared, fit.window[0], fit.window[1],
           fit.n_points, fit.coefficient)
    return ("model", "fitted", "target", "rel_deviation", "r_squared",
            "window_lo", "window_hi", "n_points", "coefficient"), [row]


def matrix_dump_table(matrix):
    coo = matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    rows = [(int(coo.row[i]), int(coo.col[i]),
             coo.data[i].real, coo.data[i].imag) for i in order]
    return ("row", "col", "re", "im"), rows
