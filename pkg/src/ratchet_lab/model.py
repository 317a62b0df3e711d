"""Grids, sampled functions, ratchet potentials and transition-rate profiles.

Every sampled object lives on a uniform grid.  Periodic objects are built on a
single period and tiled, so periodicity holds bit-for-bit at the nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

PERIODICITY_TOL = 1e-10


class ModelError(ValueError):
    """Raised when a model object violates one of its invariants."""


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``n`` nodes covering ``[A, B]``."""

    n: int
    A: float = 0.0
    B: float = 1.0
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ModelError(f"grid needs at least 3 nodes, got n={self.n}")
        if not self.B > self.A:
            raise ModelError(f"grid interval is empty: [{self.A}, {self.B}]")
        object.__setattr__(self, "n", int(self.n))
        nodes = self.A + (self.B - self.A) * np.arange(self.n) / (self.n - 1)
        nodes[-1] = self.B
        object.__setattr__(self, "nodes", _frozen(nodes))

    @property
    def h(self) -> float:
        return (self.B - self.A) / (self.n - 1)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights (include the factor ``h``)."""
        w = np.full(self.n, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    @classmethod
    def for_teeth(cls, k: int, n_min: int = 2001) -> "Grid":
        """Smallest grid on [0, 1] with ``n >= n_min`` and ``2k | n - 1``."""
        step = 2 * k
        cells = step * math.ceil((n_min - 1) / step)
        return cls(cells + 1)

    def covers_unit_interval(self) -> bool:
        return self.A == 0.0 and self.B == 1.0

    def index_of(self, x: float, tol: float = 1e-9) -> int:
        """Index of the node at ``x``; raises if ``x`` is not a node."""
        pos = (x - self.A) / self.h
        j = int(round(pos))
        if abs(pos - j) > tol or not 0 <= j < self.n:
            raise ModelError(f"x={x!r} is not a grid node")
        return j

    def nearest_index(self, x: float) -> int:
        return int(np.clip(round((x - self.A) / self.h), 0, self.n - 1))

    def period_cells(self, k: int) -> int:
        """Number of cells per well ``[x_i, x_{i+1}]``; raises if wells miss nodes."""
        if not self.covers_unit_interval():
            raise ModelError("well partition needs a grid covering [0, 1]")
        if (self.n - 1) % k:
            raise ModelError(
                f"n-1={self.n - 1} is not divisible by k={k}; well boundaries are not nodes"
            )
        return (self.n - 1) // k


@dataclass(frozen=True)
class GridFn:
    """Function sampled at the nodes of ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ModelError(f"expected {self.grid.n} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ModelError("grid function has non-finite values")
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def integral(self) -> float:
        return float(self.grid.weights @ self.values)

    def restrict(self, i0: int, i1: int) -> "GridFn":
        """Restriction to nodes ``i0..i1`` (inclusive) as a function on its own grid."""
        sub = Grid(i1 - i0 + 1, float(self.x[i0]), float(self.x[i1]))
        return GridFn(sub, self.values[i0 : i1 + 1])

    def reflected(self) -> "GridFn":
        """``x -> A + B - x``."""
        return GridFn(self.grid, self.values[::-1])

    def map(self, fn) -> "GridFn":
        return GridFn(self.grid, fn(self.values))

    def __mul__(self, other):
        if isinstance(other, GridFn):
            _check_same_grid(self, other)
            return GridFn(self.grid, self.values * other.values)
        return GridFn(self.grid, self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, GridFn):
            _check_same_grid(self, other)
            return GridFn(self.grid, self.values / other.values)
        return GridFn(self.grid, self.values / other)

    def __add__(self, other):
        if isinstance(other, GridFn):
            _check_same_grid(self, other)
            return GridFn(self.grid, self.values + other.values)
        return GridFn(self.grid, self.values + other)


def _check_same_grid(f: GridFn, g: GridFn):
    if f.grid != g.grid:
        raise ModelError("grid functions live on different grids")


def well_integrals(f: GridFn, k: int) -> np.ndarray:
    """Trapezoidal integrals of ``f`` over the wells ``[(i-1)/k, i/k]``, i = 1..k."""
    m = f.grid.period_cells(k)
    h = f.grid.h
    v = f.values
    out = np.empty(k)
    for i in range(k):
        seg = v[i * m : (i + 1) * m + 1]
        out[i] = h * (seg.sum() - 0.5 * (seg[0] + seg[-1]))
    return out


def shift_differences(f: GridFn, k: int) -> np.ndarray:
    """``f(x) - f(x + 1/k)`` at every node with ``x <= 1 - 1/k``."""
    m = f.grid.period_cells(k)
    return f.values[:-m] - f.values[m:]


def periodicity_residual(f: GridFn, k: int) -> float:
    d = shift_differences(f, k)
    return float(np.max(np.abs(d))) if d.size else 0.0


def _tile(local: np.ndarray, k: int) -> np.ndarray:
    """Tile one period sampled at ``m + 1`` nodes (both ends) over ``k`` periods."""
    m = local.size - 1
    out = np.empty(k * m + 1)
    out[:-1] = np.tile(local[:-1], k)
    out[-1] = local[-1]
    return out


def _smoothstep(t):
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True)
class Potential:
    """1/k-periodic potential with maxima at ``x_i = (i-1)/k`` and minima at ``a + x_i``."""

    k: int
    a: float
    samples: GridFn
    depth: float = 1.0

    @property
    def grid(self) -> Grid:
        return self.samples.grid

    @property
    def values(self) -> np.ndarray:
        return self.samples.values

    @property
    def cells_per_well(self) -> int:
        return self.grid.period_cells(self.k)

    @property
    def a_index(self) -> int:
        return self.grid.index_of(self.a)

    def maxima(self) -> np.ndarray:
        return np.arange(self.k + 1) / self.k

    def minima(self) -> np.ndarray:
        return self.a + np.arange(self.k) / self.k

    def extrema_indices(self) -> np.ndarray:
        m, ja = self.cells_per_well, self.a_index
        idx = [i * m for i in range(self.k + 1)] + [ja + i * m for i in range(self.k)]
        return np.sort(np.array(idx))

    def slope(self) -> np.ndarray:
        """Central-difference derivative at the nodes, exactly zero at the extrema."""
        v, h = self.values, self.grid.h
        d = np.zeros_like(v)
        d[1:-1] = (v[2:] - v[:-2]) / (2 * h)
        d[self.extrema_indices()] = 0.0
        return d

    def reflected(self) -> "Potential":
        """The potential ``psi(1 - x)``; its minimum offset becomes ``1/k - a``."""
        m = self.cells_per_well
        a_ref = (m - self.a_index) * self.grid.h
        return Potential(self.k, a_ref, self.samples.reflected(), self.depth)

    def check(self, tol: float = PERIODICITY_TOL):
        """Raise ModelError unless every structural invariant holds."""
        k, grid = self.k, self.grid
        if k < 2:
            raise ModelError(f"tooth count must exceed 1, got k={k}")
        m = grid.period_cells(k)
        ja = self.a_index
        if not 0 < ja < m:
            raise ModelError(f"minimum offset a={self.a} must lie in (0, 1/k)")
        if periodicity_residual(self.samples, k) > tol:
            raise ModelError("potential is not 1/k-periodic")
        local = self.values[: m + 1]
        down, up = np.diff(local[: ja + 1]), np.diff(local[ja:])
        if not (np.all(down < 0) and np.all(up > 0)):
            raise ModelError("potential is not strictly monotone between extrema")


def make_smoothed_sawtooth(k: int, a: float, depth: float, grid: Grid) -> Potential:
    """Ratchet potential built per tooth from two zero-end-slope cubic Hermite arcs.

    The tooth descends from ``depth`` at ``x_i`` to 0 at ``a_i`` and climbs back to
    ``depth`` at ``x_{i+1}``.  ``a`` is snapped to the nearest node.
    """
    if int(k) != k or k < 2:
        raise ModelError(f"tooth count must be an integer > 1, got k={k}")
    if not 0.0 < a < 1.0 / k:
        raise ModelError(f"minimum offset a={a} must lie in (0, 1/k={1.0 / k:.6g})")
    if not depth > 0:
        raise ModelError(f"depth must be positive, got {depth}")
    if not grid.covers_unit_interval():
        raise ModelError("the potential needs a grid covering [0, 1]")
    k = int(k)
    m = grid.period_cells(k)
    ja = int(round(a / grid.h))
    if not 0 < ja < m:
        raise ModelError(f"a={a} snaps onto a well boundary at h={grid.h}; refine the grid")
    l = np.arange(m + 1, dtype=float)
    local = np.where(
        l <= ja,
        depth * (1.0 - _smoothstep(np.minimum(l / ja, 1.0))),
        depth * _smoothstep(np.clip((l - ja) / (m - ja), 0.0, 1.0)),
    )
    pot = Potential(k, ja * grid.h, GridFn(grid, _tile(local, k)), float(depth))
    pot.check()
    return pot


@dataclass(frozen=True)
class RateProfile:
    """Strictly positive 1/k-periodic transition rate."""

    samples: GridFn
    k: int

    @property
    def grid(self) -> Grid:
        return self.samples.grid

    @property
    def values(self) -> np.ndarray:
        return self.samples.values

    def check(self, tol: float = PERIODICITY_TOL):
        if not np.all(self.values > 0):
            raise ModelError("transition rates must be strictly positive")
        if self.k > 1 and periodicity_residual(self.samples, self.k) > tol:
            raise ModelError("transition rate is not 1/k-periodic")

    def reflected(self) -> "RateProfile":
        return RateProfile(self.samples.reflected(), self.k)


def make_constant_rate(value: float, k: int, grid: Grid) -> RateProfile:
    if not value > 0:
        raise ModelError(f"rate must be positive, got {value}")
    return RateProfile(GridFn(grid, np.full(grid.n, float(value))), int(k))


def make_peaked_rate(
    k: int, s_star: float, width: float, base: float, mass: float, grid: Grid
) -> RateProfile:
    """Background ``base`` plus a periodized Gaussian bump of mass ``mass`` per period.

    The bump is centred at ``s_star + x_i`` (``s_star`` snapped to a node),
    truncated at six widths and renormalized so its trapezoidal integral over
    one period equals ``mass`` exactly.
    """
    if not width > 0:
        raise ModelError(f"bump width must be positive, got {width}")
    if not base > 0:
        raise ModelError(f"background rate must be positive, got {base}")
    if not mass > 0:
        raise ModelError(f"bump mass must be positive, got {mass}")
    if not 0.0 < s_star < 1.0 / k:
        raise ModelError(f"site offset s_star={s_star} must lie in (0, 1/k)")
    m = grid.period_cells(k)
    h = grid.h
    period = m * h
    centre = round(s_star / h) * h
    xl = np.arange(m + 1) * h
    bump = np.zeros(m + 1)
    cutoff = 6.0 * width
    images = int(math.ceil(cutoff / period)) + 1
    for j in range(-images, images + 1):
        d = xl - centre - j * period
        inside = np.abs(d) <= cutoff
        bump[inside] += np.exp(-0.5 * (d[inside] / width) ** 2)
    local_mass = h * (bump.sum() - 0.5 * (bump[0] + bump[-1]))
    local = base + mass * bump / local_mass
    rate = RateProfile(GridFn(grid, _tile(local, k)), int(k))
    rate.check()
    return rate


def make_smooth_rate(k: int, mean: float, amplitude: float, phase: float, grid: Grid) -> RateProfile:
    """``mean * (1 + amplitude * cos(2 pi k (x - phase)))``; symmetric when ``phase`` is 0 or 1/(2k)."""
    if not 0 <= amplitude < 1:
        raise ModelError("amplitude must lie in [0, 1) to keep the rate positive")
    m = grid.period_cells(k)
    xl = np.arange(m + 1) * grid.h
    local = mean * (1.0 + amplitude * np.cos(2 * np.pi * k * (xl - phase)))
    rate = RateProfile(GridFn(grid, _tile(local, k)), int(k))
    rate.check()
    return rate


@dataclass(frozen=True)
class RatchetParams:
    """Coefficients of the two-state flashing ratchet."""

    sigma: float
    varsigma: float
    kappa: float
    potential: Potential
    nu: RateProfile
    eta: RateProfile
    psi_alt: GridFn | None = None

    def __post_init__(self):
        for name in ("sigma", "varsigma", "kappa"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ModelError(f"{name} must be positive, got {val}")
        grid = self.potential.grid
        if self.nu.grid != grid or self.eta.grid != grid:
            raise ModelError("potential, nu and eta must share one grid")
        if self.nu.k != self.potential.k or self.eta.k != self.potential.k:
            raise ModelError("potential, nu and eta must share the period count k")
        if self.psi_alt is not None and self.psi_alt.grid != grid:
            raise ModelError("the second potential must live on the same grid")
        self.nu.check()
        self.eta.check()

    @property
    def grid(self) -> Grid:
        return self.potential.grid

    @property
    def k(self) -> int:
        return self.potential.k

    @property
    def a(self) -> float:
        return self.potential.a

    @property
    def b(self) -> np.ndarray:
        """``psi_x / eta`` at the nodes."""
        return self.potential.slope() / self.eta.values

    def reflected(self) -> "RatchetParams":
        """The instance mirrored by ``x -> 1 - x``."""
        alt = self.psi_alt.reflected() if self.psi_alt is not None else None
        return RatchetParams(
            self.sigma,
            self.varsigma,
            self.kappa,
            self.potential.reflected(),
            self.nu.reflected(),
            self.eta.reflected(),
            alt,
        )

    def replace(self, **changes) -> "RatchetParams":
        return replace(self, **changes)


def conjugate_eta(potential: Potential, nu: RateProfile, kappa: float, sigma: float) -> RateProfile:
    """Detachment rate ``nu * exp(kappa psi / sigma)`` for which no transport occurs."""
    return RateProfile(GridFn(nu.grid, nu.values * np.exp(kappa * potential.values / sigma)), nu.k)
