"""Stationary state of the squeezing ratchet.

Detached particles diffuse with coefficient ``varsigma`` and are removed at
rate ``nu``; a particle removed anywhere in well ``i`` is re-injected at the
minimum ``a_i``.  The stationary density ``Q`` is a combination
``sum_i xi_i q_i`` of the Green's functions ``q_i = G(., a_i)``, where ``xi``
is the left Perron vector of the stochastic matrix ``P_ij = int_{well j} nu q_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bvp import SLOperator, green_columns, green_function_at
from .model import GridFn, ModelError, RateProfile, RatchetParams, shift_differences, well_integrals

ROW_SUM_TOL = 1e-10


class PerronError(ArithmeticError):
    pass


@dataclass(frozen=True)
class TransitionMatrix:
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ModelError("transition matrix must be square")
        if not np.all(e > 0):
            i, j = np.argwhere(e <= 0)[0]
            raise ModelError(f"nonpositive transition entry P[{i},{j}]={e[i, j]:.3e}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    def row_sum_defect(self) -> float:
        return float(np.max(np.abs(self.entries.sum(axis=1) - 1.0)))


@dataclass(frozen=True)
class SqueezeSolution:
    Q: GridFn
    xi: np.ndarray
    gamma: float
    M: float
    residual: float
    Q_gap: float
    q: GridFn
    matrix: TransitionMatrix


def green_basis(params: RatchetParams, minimum: float | None = None) -> list[GridFn]:
    """``q_i = G(., a_i)`` for the operator ``nu - varsigma d^2/dx^2``.

    ``minimum`` overrides the offset ``a``; an off-node value uses the
    linearly split source of :func:`green_function_at`.
    """
    grid = params.grid
    op = SLOperator(params.nu.samples, params.varsigma)
    k = params.k
    if minimum is None:
        m = grid.period_cells(k)
        ja = params.potential.a_index
        cols = green_columns(op, [ja + i * m for i in range(k)])
        return [GridFn(grid, cols[:, i]) for i in range(k)]
    if not 0 < minimum < 1.0 / k:
        raise ModelError(f"minimum offset {minimum} must lie in (0, 1/k)")
    return [green_function_at(op, minimum + i / k) for i in range(k)]


def transition_matrix(basis: list[GridFn], nu: RateProfile, k: int) -> TransitionMatrix:
    rows = [well_integrals(q * nu.samples, k) for q in basis]
    mat = TransitionMatrix(np.array(rows))
    defect = mat.row_sum_defect()
    if defect > ROW_SUM_TOL:
        raise ModelError(f"transition matrix rows do not sum to one (defect {defect:.2e})")
    return mat


def perron_weights(
    P: TransitionMatrix, tol: float = 1e-13, max_iter: int = 10000, start: np.ndarray | None = None
) -> np.ndarray:
    """Left fixed vector ``xi = xi P`` with unit sum, by power iteration."""
    e = P.entries
    k = P.k
    xi = np.full(k, 1.0 / k) if start is None else np.asarray(start, dtype=float) / np.sum(start)
    for _ in range(max_iter):
        nxt = xi @ e
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - xi)) < tol:
            return nxt
        xi = nxt
    ev = np.sort(np.abs(np.linalg.eigvals(e)))[::-1]
    gap = 1.0 - ev[1] if k > 1 else 1.0
    raise PerronError(f"power iteration did not converge in {max_iter} steps (spectral gap {gap:.2e})")


def squeeze_solution(params: RatchetParams, minimum: float | None = None) -> SqueezeSolution:
    k = params.k
    nu = params.nu
    basis = green_basis(params, minimum)
    P = transition_matrix(basis, nu, k)
    xi = perron_weights(P)
    Qv = sum(x * q.values for x, q in zip(xi, basis))
    Q = GridFn(params.grid, Qv)
    weights = well_integrals(Q * nu.samples, k)
    q = GridFn(params.grid, sum(b.values for b in basis))
    return SqueezeSolution(
        Q=Q,
        xi=xi,
        gamma=float(np.min(shift_differences(q, k))),
        M=float(np.min(P.entries[:, k - 1])),
        residual=float(np.max(np.abs(weights - xi))),
        Q_gap=float(np.min(shift_differences(Q, k))),
        q=q,
        matrix=P,
    )
