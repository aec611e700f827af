"""CSV output: one header row, floats as %.17g, LF line endings."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..model import ConservedState, FluidModel, entropy

SNAPSHOT_HEADER = ("x", "h", "u", "w", "entropy_density")
DIAGNOSTICS_HEADER = ("t", "total_entropy", "mass", "momentum", "newton_iters")
HAM_SNAPSHOT_HEADER = ("x", "h", "u")
HAM_DIAGNOSTICS_HEADER = ("t", "H", "momentum", "zone_width")
STABILITY_HEADER = ("xi", "|G+|", "|G-|", "verdict")


def _fmt(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path, header, rows):
    """Write ``rows`` (iterables matching ``header``) to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def read_csv(path):
    """Header and columns; numeric columns come back as float arrays."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = list(reader)
    cols = {}
    for k, name in enumerate(header):
        raw = [r[k] for r in data]
        try:
            cols[name] = np.array([float(v) for v in raw])
        except ValueError:
            cols[name] = raw
    return header, cols


def snapshot_rows(model: FluidModel, state: ConservedState):
    return zip(state.x, state.rho, state.u, state.w, entropy(model, state.as_array()))


def write_snapshot(path, model: FluidModel, state: ConservedState):
    return write_csv(path, SNAPSHOT_HEADER, snapshot_rows(model, state))


def write_diagnostics(path, rows):
    return write_csv(path, DIAGNOSTICS_HEADER,
                     ((r.t, r.total_entropy, r.mass, r.momentum, r.newton_iters) for r in rows))


def write_stability_table(path, xi, amp_plus, amp_minus, tol_growth):
    verdict = ["stable" if max(a, b) <= 1 + tol_growth else "unstable" for a, b in zip(amp_plus, amp_minus)]
    return write_csv(path, STABILITY_HEADER, zip(xi, amp_plus, amp_minus, verdict))


def snapshot_name(t):
    return f"snapshot_t{t:.6f}.csv"
