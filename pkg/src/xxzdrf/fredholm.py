"""Nystrom solver for f(lam) + int_{-Q}^{Q} k(lam - mu) f(mu) dmu = g(lam)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import lu_factor, lu_solve


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureGrid:
    Q: float
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class GridFunction:
    grid: QuadratureGrid
    values: np.ndarray


def build_grid(Q: float, N: int) -> QuadratureGrid:
    """Gauss-Legendre nodes and weights on [-Q, Q]."""
    if Q <= 0 or N < 8:
        raise ValueError("need Q > 0 and N >= 8")
    x, w = leggauss(int(N))
    return QuadratureGrid(float(Q), Q * x, Q * w)


@dataclass
class NystromOperator:
    """I + K W on a grid, factorized once and reused for many right-hand sides."""

    grid: QuadratureGrid
    kernel: Callable
    _lu: tuple = field(init=False, repr=False)
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lam = self.grid.nodes
        kmat = self.kernel(lam[:, None] - lam[None, :])
        self.matrix = np.eye(lam.size) + kmat * self.grid.weights[None, :]
        cond = np.linalg.cond(self.matrix)
        if not np.isfinite(cond) or cond > 1e12:
            raise NumericalError(f"Nystrom matrix is singular (condition {cond:.3e})")
        self._lu = lu_factor(self.matrix)

    def solve(self, rhs_values) -> np.ndarray:
        return lu_solve(self._lu, np.asarray(rhs_values, dtype=float))

    def solve_transposed(self, values) -> np.ndarray:
        return lu_solve(self._lu, np.asarray(values, dtype=float), trans=1)

    def extend(self, values, lam, rhs_at, kernel=None):
        """Nystrom extension f(lam) = g(lam) - sum_j w_j k(lam - mu_j) f_j."""
        kern = self.kernel if kernel is None else kernel
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        kmat = kern(lam[:, None] - self.grid.nodes[None, :])
        return rhs_at(lam) - kmat @ (self.grid.weights * values)


def solve_second_kind(kernel: Callable, rhs: Callable, grid: QuadratureGrid) -> GridFunction:
    op = NystromOperator(grid, kernel)
    return GridFunction(grid, op.solve(rhs(grid.nodes)))


def evaluate_offgrid(f: GridFunction, kernel: Callable, rhs: Callable, lam):
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    kmat = kernel(lam_arr[:, None] - f.grid.nodes[None, :])
    out = rhs(lam_arr) - kmat @ (f.grid.weights * f.values)
    return out if np.ndim(lam) else float(out[0])
