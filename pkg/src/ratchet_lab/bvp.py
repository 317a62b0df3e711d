"""Neumann Sturm-Liouville problems ``phi u - varsigma u'' = f`` on a uniform grid.

The second derivative uses the three-point stencil with a mirror ghost node at
each end.  Rows are scaled by the trapezoidal weights so the discrete operator
is symmetric; summing the scheme then reproduces ``int phi u = int f`` exactly
under the trapezoidal rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .model import Grid, GridFn, ModelError


class SingularSystemError(ArithmeticError):
    pass


@dataclass(frozen=True)
class TridiagonalSystem:
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if len(self.sub) != n - 1 or len(self.sup) != n - 1:
            raise ValueError("sub/super diagonals must have length n-1")
        if len(self.rhs) != n:
            raise ValueError("right-hand side must have length n")

    def dominance_violations(self) -> np.ndarray:
        """Row indices where ``|diag| < |sub| + |sup|``."""
        off = np.zeros_like(self.diag)
        off[1:] += np.abs(self.sub)
        off[:-1] += np.abs(self.sup)
        return np.flatnonzero(np.abs(self.diag) < off)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        out = self.diag[:, None] * u if u.ndim == 2 else self.diag * u
        if u.ndim == 2:
            out[1:] += self.sub[:, None] * u[:-1]
            out[:-1] += self.sup[:, None] * u[1:]
        else:
            out[1:] += self.sub * u[:-1]
            out[:-1] += self.sup * u[1:]
        return out

    def solve(self) -> np.ndarray:
        return thomas_solve(self.sub, self.diag, self.sup, self.rhs)


def thomas_solve(sub, diag, sup, rhs) -> np.ndarray:
    """Tridiagonal elimination without pivoting.

    ``rhs`` may be a vector or an ``(n, m)`` array of right-hand sides.  Valid
    for diagonally dominant matrices; a vanishing pivot raises
    ``SingularSystemError``.
    """
    sub = np.asarray(sub, dtype=float)
    diag = np.asarray(diag, dtype=float)
    sup = np.asarray(sup, dtype=float)
    d = np.array(rhs, dtype=float)
    n = diag.size
    c = np.empty(n - 1)
    beta = diag[0]
    if beta == 0.0:
        raise SingularSystemError("zero pivot in row 0")
    c[0] = sup[0] / beta
    d[0] = d[0] / beta
    for i in range(1, n):
        beta = diag[i] - sub[i - 1] * c[i - 1]
        if beta == 0.0 or not np.isfinite(beta):
            raise SingularSystemError(f"degenerate pivot in row {i}")
        if i < n - 1:
            c[i] = sup[i] / beta
        d[i] = (d[i] - sub[i - 1] * d[i - 1]) / beta
    for i in range(n - 2, -1, -1):
        d[i] -= c[i] * d[i + 1]
    return d


@dataclass(frozen=True)
class SLOperator:
    """``L u = phi u - varsigma u''`` with homogeneous Neumann ends."""

    phi: GridFn
    varsigma: float = 1.0

    def __post_init__(self):
        if not self.varsigma > 0:
            raise ModelError(f"varsigma must be positive, got {self.varsigma}")
        if not np.all(self.phi.values > 0):
            raise ModelError("zeroth-order coefficient must be strictly positive")

    @property
    def grid(self) -> Grid:
        return self.phi.grid

    def weighted_system(self, rhs: np.ndarray) -> TridiagonalSystem:
        """Symmetric tridiagonal form ``W L u = W rhs`` with trapezoidal weights ``W``."""
        grid = self.grid
        h = grid.h
        w = grid.weights / h
        c = self.varsigma / h**2
        diag = w * self.phi.values + 2.0 * c * w
        off = np.full(grid.n - 1, -c)
        rhs = np.asarray(rhs, dtype=float)
        wr = w[:, None] * rhs if rhs.ndim == 2 else w * rhs
        return TridiagonalSystem(off, diag, off, wr)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Discrete ``L u`` at every node (ghost-node closure at the ends)."""
        h = self.grid.h
        lap = np.empty_like(u)
        lap[1:-1] = u[:-2] - 2 * u[1:-1] + u[2:]
        lap[0] = 2 * (u[1] - u[0])
        lap[-1] = 2 * (u[-2] - u[-1])
        return self.phi.values * u - self.varsigma * lap / h**2


def solve_sl_neumann(op: SLOperator, rhs: GridFn | np.ndarray) -> GridFn:
    values = rhs.values if isinstance(rhs, GridFn) else np.asarray(rhs, dtype=float)
    if isinstance(rhs, GridFn) and rhs.grid != op.grid:
        raise ModelError("right-hand side lives on a different grid")
    return GridFn(op.grid, op.weighted_system(values).solve())


def delta(grid: Grid, j: int) -> np.ndarray:
    """Lumped Dirac mass at node ``j`` with unit trapezoidal integral."""
    d = np.zeros(grid.n)
    d[j] = 1.0 / grid.weights[j]
    return d


def green_columns(op: SLOperator, indices) -> np.ndarray:
    """``G(., x_j)`` for each node index ``j``, stacked as columns."""
    grid = op.grid
    idx = list(indices)
    rhs = np.zeros((grid.n, len(idx)))
    for col, j in enumerate(idx):
        rhs[:, col] = delta(grid, j)
    return op.weighted_system(rhs).solve()


def green_function(op: SLOperator, y: float) -> GridFn:
    """Green's function ``G(., y)`` for a source at the grid node ``y``."""
    j = op.grid.index_of(y)
    return GridFn(op.grid, green_columns(op, [j])[:, 0])


def green_function_at(op: SLOperator, y: float) -> GridFn:
    """Green's function for a source anywhere in ``[A, B]``.

    An off-node source is split linearly between the two bracketing nodes.
    This is the source consistent with locating diffusive means by linear
    interpolation between nodes.
    """
    grid = op.grid
    pos = (y - grid.A) / grid.h
    if not -1e-9 <= pos <= grid.n - 1 + 1e-9:
        raise ModelError(f"source y={y} lies outside [{grid.A}, {grid.B}]")
    j = min(int(np.floor(pos)), grid.n - 2)
    theta = min(max(pos - j, 0.0), 1.0)
    cols = green_columns(op, [j, j + 1])
    return GridFn(grid, (1.0 - theta) * cols[:, 0] + theta * cols[:, 1])


class BandedLU:
    """LU factorization of a banded matrix given in ``solve_banded`` storage.

    ``ab[ku + i - j, j] = A[i, j]``.  Factor once, solve many right-hand sides.
    """

    def __init__(self, ab: np.ndarray, kl: int, ku: int):
        n = ab.shape[1]
        work = np.zeros((2 * kl + ku + 1, n))
        work[kl:] = ab
        lu, piv, info = lapack.dgbtrf(work, kl, ku)
        if info > 0:
            raise SingularSystemError(f"banded factorization hit a zero pivot at row {info - 1}")
        if info < 0:
            raise ValueError(f"dgbtrf rejected argument {-info}")
        self.kl, self.ku = kl, ku
        self._lu, self._piv = lu, piv

    def solve(self, b: np.ndarray) -> np.ndarray:
        x, info = lapack.dgbtrs(self._lu, self.kl, self.ku, b, self._piv)
        if info:
            raise ValueError(f"dgbtrs rejected argument {-info}")
        return x


def banded_matvec(ab: np.ndarray, kl: int, ku: int, u: np.ndarray, absolute: bool = False) -> np.ndarray:
    """``A @ u`` (or ``|A| @ |u|``) for ``A`` in ``solve_banded`` storage."""
    n = ab.shape[1]
    a = np.abs(ab) if absolute else ab
    v = np.abs(u) if absolute else u
    out = np.zeros(n)
    for off in range(-kl, ku + 1):
        row = ku - off
        if off >= 0:
            out[: n - off] += a[row, off:] * v[off:]
        else:
            out[-off:] += a[row, : n + off] * v[: n + off]
    return out
