"""Newton iteration with a colour-grouped finite-difference Jacobian.

Unknowns are laid out as ``(n_comp, n_cells)`` and each residual row depends only
on cells within ``band`` of its own cell (with periodic wrap).  Columns whose
row supports do not overlap are perturbed together, so a Jacobian costs
``n_comp * n_colours`` residual evaluations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import NewtonError

_SQRT_EPS = np.sqrt(np.finfo(float).eps)


def colour_groups(n_cells: int, band: int):
    """Cell index groups with pairwise periodic distance > 2*band."""
    c = 2 * band + 1
    if n_cells <= c:
        return [np.array([j]) for j in range(n_cells)]
    full = (n_cells // c) * c
    groups = [np.arange(k, full, c) for k in range(c)]
    groups += [np.array([j]) for j in range(full, n_cells)]
    return groups


@dataclass
class BandedJacobian:
    """Sparsity pattern and colouring for a given grid; reusable across calls."""

    n_comp: int
    n_cells: int
    band: int = 2

    def __post_init__(self):
        self.groups = colour_groups(self.n_cells, self.band)
        offsets = np.arange(-self.band, self.band + 1)
        self._rows_of = {}
        for g in self.groups:
            if self.n_cells <= 2 * self.band + 1:
                cells = np.arange(self.n_cells)[None, :]  # every row depends on every cell
            else:
                cells = (g[:, None] + offsets[None, :]) % self.n_cells  # (len(g), 2b+1)
            self._rows_of[id(g)] = cells

    def evaluate(self, fun, x, f0=None):
        """Sparse CSC approximation of d fun / d x at ``x`` (shape (n_comp, n_cells))."""
        x = np.asarray(x, dtype=float)
        f0 = fun(x) if f0 is None else f0
        n = self.n_cells
        scale = np.mean(np.abs(x), axis=1)
        # a component that is identically zero borrows the scale of the others
        scale = np.maximum(scale, max(1e-2 * scale.max(), np.finfo(float).tiny))
        rows, cols, vals = [], [], []
        for g in self.groups:
            row_cells = self._rows_of[id(g)]
            for c in range(self.n_comp):
                h = _SQRT_EPS * np.maximum(np.abs(x[c, g]), scale[c])
                xp = x.copy()
                xp[c, g] += h
                h = xp[c, g] - x[c, g]  # representable step
                df = fun(xp) - f0
                # column (c, j) touches rows (r, j + offset) for every component r
                for r in range(self.n_comp):
                    block = df[r, row_cells] / h[:, None]
                    rows.append((r * n + row_cells).ravel())
                    cols.append(np.repeat(c * n + g, row_cells.shape[1]))
                    vals.append(block.ravel())
        size = self.n_comp * n
        jac = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(size, size))
        return jac.tocsc()


@dataclass
class NewtonResult:
    x: np.ndarray
    iterations: int
    residual: float


def newton_solve(residual, x0, jacobian: BandedJacobian, tol=1e-10, max_iter=20):
    """Solve ``residual(x) = 0`` from ``x0``; stops on the infinity norm of the residual.

    Also accepts the iterate once the Newton update stalls at round-off level,
    since very small absolute tolerances can sit below the attainable accuracy.
    """
    x = np.array(x0, dtype=float)
    r = residual(x)
    res = float(np.max(np.abs(r)))
    it = 0
    while res > tol:
        if it >= max_iter or not np.isfinite(res):
            raise NewtonError(res, it)
        jac = jacobian.evaluate(residual, x, r)
        try:
            dx = splu(jac).solve(-r.ravel()).reshape(x.shape)
        except RuntimeError as exc:  # singular factor
            raise NewtonError(res, it) from exc
        x = x + dx
        it += 1
        r = residual(x)
        new_res = float(np.max(np.abs(r)))
        tiny = 8 * np.finfo(float).eps * np.max(np.abs(x), axis=1, keepdims=True)
        if np.all(np.abs(dx) <= tiny) and new_res >= 0.5 * res:
            res = new_res
            break
        res = new_res
    return NewtonResult(x, it, res)
