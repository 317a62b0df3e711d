"""phi-diffusive means of the endpoints of a segment.

The mean ``s`` is the source position for which the Neumann Green's function
of ``phi U - U''`` takes equal values at both ends: ``G(A, s) = G(B, s)``.
``g(x) = G(A, x) - G(B, x)`` is strictly decreasing, so ``s`` is bracketed by
bisection over the nodes and refined by linear interpolation in the
bracketing cell.  By symmetry of the discrete Green's function only the two
columns ``G(., A)`` and ``G(., B)`` are needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bvp import SLOperator, green_columns
from .model import GridFn


class DiffusiveMeanError(ArithmeticError):
    pass


@dataclass(frozen=True)
class DiffusiveMeanResult:
    s: float
    g_residual: float
    iterations: int
    A: float
    B: float


def endpoint_difference(phi: GridFn, varsigma: float = 1.0) -> np.ndarray:
    """``g(x_j) = G(A, x_j) - G(B, x_j)`` for the coefficient ``phi / varsigma``."""
    op = SLOperator(phi / varsigma, 1.0)
    cols = green_columns(op, [0, phi.grid.n - 1])
    return cols[:, 0] - cols[:, 1]


def diffusive_mean(phi: GridFn, varsigma: float = 1.0) -> DiffusiveMeanResult:
    """The ``phi/varsigma``-diffusive mean of the grid endpoints."""
    g = endpoint_difference(phi, varsigma)
    if not (g[0] > 0 > g[-1]):
        raise DiffusiveMeanError(
            f"g does not change sign (g(A)={g[0]:.3e}, g(B)={g[-1]:.3e}); discretization failure"
        )
    lo, hi = 0, g.size - 1
    iterations = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if g[mid] > 0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    theta = g[lo] / (g[lo] - g[hi])
    x = phi.grid.nodes
    s = float(x[lo] + theta * (x[hi] - x[lo]))
    resid = abs((1 - theta) * g[lo] + theta * g[hi])
    return DiffusiveMeanResult(s, float(resid), iterations, phi.grid.A, phi.grid.B)


def reflection_check(phi: GridFn, varsigma: float = 1.0) -> tuple[float, float]:
    """Diffusive means of ``phi`` and of its mirror image ``phi(A + B - x)``."""
    s = diffusive_mean(phi, varsigma).s
    s_tilde = diffusive_mean(phi.reflected(), varsigma).s
    return s, s_tilde
