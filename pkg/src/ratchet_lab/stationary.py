"""Stationary two-state flashing ratchet and the transport verdict.

Finite volumes on the trapezoidal dual cells of the grid.  The drift-diffusion
flux of each state is exponentially fitted (Scharfetter-Gummel), so the
attached block stays an M-matrix for any ``kappa/sigma`` and Boltzmann
equilibria are reproduced exactly.  Unknowns are interleaved per node as
``(p_0, P_0, p_1, P_1, ...)`` which makes the coupled operator pentadiagonal.

Sign convention: ``u_t = -A u``.  Every column of ``A`` has zero weighted sum,
so the trapezoidal mass ``sum_j c_j (p_j + P_j)`` is exactly conserved.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .bvp import SingularSystemError, banded_matvec
from .diffusive_mean import diffusive_mean
from .model import GridFn, ModelError, RatchetParams, shift_differences, well_integrals

KL = KU = 2
STRICT_SLACK = 1e-9
NEGATIVITY_TOL = 1e-10


class NegativeDensityError(ArithmeticError):
    pass


def bernoulli(x: np.ndarray) -> np.ndarray:
    """``B(x) = x / (exp(x) - 1)`` with ``B(0) = 1``."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-10
    out[small] = 1.0 - 0.5 * x[small]
    big = ~small
    with np.errstate(over="ignore"):
        out[big] = x[big] / np.expm1(x[big])
    return out


def sg_coefficients(diffusivity: float, exponent: np.ndarray, h: float, cells: np.ndarray):
    """Divergence of the fitted flux ``-D (u' + Phi' u)`` per unit cell volume.

    Returns ``(lower, diag, upper)``: coefficients of ``u_{j-1}``, ``u_j`` and
    ``u_{j+1}`` in row ``j``; ``lower[0]`` and ``upper[-1]`` are zero.
    """
    d = np.diff(exponent)
    bp, bm = bernoulli(d), bernoulli(-d)
    f = diffusivity / h
    n = exponent.size
    lower, diag, upper = np.zeros(n), np.zeros(n), np.zeros(n)
    diag[:-1] += f * bp
    diag[1:] += f * bm
    upper[:-1] = -f * bm
    lower[1:] = -f * bp
    return lower / cells, diag / cells, upper / cells


@dataclass(frozen=True)
class FlashingOperator:
    """Pentadiagonal generator of the coupled attached/detached dynamics."""

    ab: np.ndarray
    cells: np.ndarray

    @property
    def n(self) -> int:
        return self.cells.size

    def apply(self, u: np.ndarray) -> np.ndarray:
        return banded_matvec(self.ab, KL, KU, u)

    def apply_abs(self, u: np.ndarray) -> np.ndarray:
        return banded_matvec(self.ab, KL, KU, u, absolute=True)

    def mass(self, u: np.ndarray) -> float:
        return float(self.cells @ (u[0::2] + u[1::2]))


def _put(ab, i, j, val):
    ab[KU + i - j, j] = val


def assemble(params: RatchetParams, psi_alt: GridFn | None = None) -> FlashingOperator:
    grid = params.grid
    n, h = grid.n, grid.h
    cells = grid.weights
    nu, eta = params.nu.values, params.eta.values
    lp, dp, up = sg_coefficients(
        params.sigma, params.kappa * params.potential.values / params.sigma, h, cells
    )
    alt = np.zeros(n) if psi_alt is None else params.kappa * psi_alt.values / params.varsigma
    lP, dP, uP = sg_coefficients(params.varsigma, alt, h, cells)
    ab = np.zeros((KL + KU + 1, 2 * n))
    ip = 2 * np.arange(n)
    iP = ip + 1
    # banded storage: row KU + i - j holds A[i, j]
    ab[KU, ip] = dp + eta
    ab[KU, iP] = dP + nu
    ab[KU - 2, ip[1:]] = up[:-1]      # A[p_j, p_{j+1}]
    ab[KU + 2, ip[:-1]] = lp[1:]      # A[p_j, p_{j-1}]
    ab[KU - 2, iP[1:]] = uP[:-1]
    ab[KU + 2, iP[:-1]] = lP[1:]
    ab[KU - 1, iP] = -nu              # A[p_j, P_j]
    ab[KU + 1, ip] = -eta             # A[P_j, p_j]
    return FlashingOperator(ab, cells)


@dataclass(frozen=True)
class DensityPair:
    p: GridFn
    P: GridFn
    normalization_mode: str = "total-mass"

    @property
    def grid(self):
        return self.p.grid

    def mass(self) -> float:
        return self.p.integral() + self.P.integral()

    def stacked(self) -> np.ndarray:
        u = np.empty(2 * self.grid.n)
        u[0::2], u[1::2] = self.p.values, self.P.values
        return u

    @classmethod
    def from_stacked(cls, grid, u: np.ndarray, mode: str = "total-mass") -> "DensityPair":
        return cls(GridFn(grid, u[0::2]), GridFn(grid, u[1::2]), mode)

    def l1_distance(self, other: "DensityPair") -> float:
        w = self.grid.weights
        return float(w @ np.abs(self.p.values - other.p.values) + w @ np.abs(self.P.values - other.P.values))

    def reflected(self) -> "DensityPair":
        return DensityPair(self.p.reflected(), self.P.reflected(), self.normalization_mode)


@dataclass(frozen=True)
class StationaryDiagnostics:
    residual: float
    dropped_row_residual: float
    min_value: float


def _solve_singular(op: FlashingOperator):
    """Null vector of ``A`` normalized to unit mass.

    The last detached row is redundant (columns have zero weighted sum); it is
    replaced by the pin ``P_{n-1} = 1`` and the result rescaled to unit mass,
    which keeps the system banded.
    """
    N = 2 * op.n
    r = N - 1
    ab = op.ab.copy()
    for j in range(max(0, r - KL), N):
        ab[KU + r - j, j] = 0.0
    ab[KU, r] = 1.0
    rhs = np.zeros(N)
    rhs[r] = 1.0
    try:
        u = solve_banded((KL, KU), ab, rhs, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    if not np.all(np.isfinite(u)):
        raise SingularSystemError("stationary solve produced non-finite values")
    u /= op.mass(u)
    res = op.apply(u)
    scale = np.max(op.apply_abs(u))
    diag = StationaryDiagnostics(
        residual=float(np.max(np.abs(res)) / scale),
        dropped_row_residual=float(abs(res[r]) / scale),
        min_value=float(u.min()),
    )
    return u, diag


def _solve(params: RatchetParams, psi_alt: GridFn | None):
    op = assemble(params, psi_alt)
    u, diag = _solve_singular(op)
    tol = NEGATIVITY_TOL * np.max(np.abs(u))
    if diag.min_value < -tol:
        j = int(np.argmin(u))
        raise NegativeDensityError(
            f"negative {'pP'[j % 2]} = {u[j]:.3e} at x = {params.grid.nodes[j // 2]:.6f}; grid under-resolved"
        )
    u = np.maximum(u, 0.0)
    return DensityPair.from_stacked(params.grid, u), diag


def solve_stationary(params: RatchetParams, with_diagnostics: bool = False):
    """Stationary densities ``(p, P)`` with unit total mass."""
    if params.psi_alt is not None:
        raise ModelError("params carry a second potential; use solve_collaborative")
    pair, diag = _solve(params, None)
    return (pair, diag) if with_diagnostics else pair


def solve_collaborative(params: RatchetParams, with_diagnostics: bool = False):
    """Stationary densities when the detached state also feels ``psi_alt``."""
    if params.psi_alt is None:
        raise ModelError("collaborative ratchet needs params.psi_alt")
    pair, diag = _solve(params, params.psi_alt)
    return (pair, diag) if with_diagnostics else pair


def balance(pair: DensityPair, params: RatchetParams) -> tuple[float, float]:
    """``(int eta p, int nu P)``; equal for any stationary pair."""
    return (pair.p * params.eta.samples).integral(), (pair.P * params.nu.samples).integral()


def renormalize(pair: DensityPair, params: RatchetParams, tol: float = 1e-8) -> DensityPair:
    """Rescale so that ``int eta p = int nu P = 1``."""
    if pair.normalization_mode != "total-mass":
        raise ModelError("renormalize expects a total-mass pair")
    detach, attach = balance(pair, params)
    if abs(detach - attach) > tol * max(abs(detach), abs(attach)):
        raise ArithmeticError(f"attachment/detachment balance violated: {detach!r} vs {attach!r}")
    c = 1.0 / detach
    return DensityPair(pair.p * c, pair.P * c, "renormalized")


class Direction(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    INDETERMINATE = "indeterminate"

    def __str__(self):
        return self.value


def chain_slack(values: np.ndarray) -> float:
    """Smallest decrement ``v_i - v_{i+1}``."""
    return float(np.min(values[:-1] - values[1:]))


@dataclass(frozen=True)
class WellMassReport:
    p_hat: np.ndarray
    P_hat: np.ndarray
    chain_p: bool
    chain_P: bool
    shift_P_ok: bool
    min_margin: float
    reversed_chain_p: bool
    reversed_chain_P: bool
    reversed_shift_P_ok: bool
    reversed_min_margin: float

    @property
    def forward(self) -> bool:
        return self.chain_p and self.chain_P and self.shift_P_ok

    @property
    def backward(self) -> bool:
        return self.reversed_chain_p and self.reversed_chain_P and self.reversed_shift_P_ok

    @property
    def direction(self) -> Direction:
        if self.forward:
            return Direction.LEFT
        if self.backward:
            return Direction.RIGHT
        return Direction.INDETERMINATE


def well_mass_report(pair: DensityPair, k: int, slack: float = STRICT_SLACK) -> WellMassReport:
    p_hat = well_integrals(pair.p, k)
    P_hat = well_integrals(pair.P, k)
    shift = shift_differences(pair.P, k)
    fwd = (chain_slack(p_hat), chain_slack(P_hat), float(shift.min()))
    bwd = (chain_slack(-p_hat), chain_slack(-P_hat), float((-shift).min()))
    return WellMassReport(
        p_hat=p_hat,
        P_hat=P_hat,
        chain_p=fwd[0] > slack,
        chain_P=fwd[1] > slack,
        shift_P_ok=fwd[2] > slack,
        min_margin=min(fwd),
        reversed_chain_p=bwd[0] > slack,
        reversed_chain_P=bwd[1] > slack,
        reversed_shift_P_ok=bwd[2] > slack,
        reversed_min_margin=min(bwd),
    )


@dataclass(frozen=True)
class TransportVerdict:
    S: float
    a: float
    direction: Direction
    margin: float
    h: float


def classify(margin: float, h: float) -> Direction:
    if margin > 2 * h:
        return Direction.LEFT
    if margin < -2 * h:
        return Direction.RIGHT
    return Direction.INDETERMINATE


def attachment_mean(params: RatchetParams) -> float:
    """``S``: the ``nu/varsigma``-diffusive mean of ``0`` and ``1/k``."""
    m = params.grid.period_cells(params.k)
    return diffusive_mean(params.nu.samples.restrict(0, m), params.varsigma).s


def transport_verdict(params: RatchetParams) -> TransportVerdict:
    S = attachment_mean(params)
    margin = S - params.a
    h = params.grid.h
    return TransportVerdict(S, params.a, classify(margin, h), margin, h)
