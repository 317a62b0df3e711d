"""Implicit-Euler time integration of the flashing ratchets.

The randomly flashing system reuses the stationary generator ``A``: one step
solves ``(I + dt A) u_new = u_old``.  Both models conserve the trapezoidal
mass exactly and keep densities nonnegative for every ``dt`` (the step matrix
is an M-matrix).

In floating point the solve loses mass at the level ``eps * cond(I + dt A)``,
which passes 1e-12 once ``dt |A|`` is large.  Each step therefore rescales the
solution by ``mass_old / mass_new``, a factor within a few ulps of 1 times
the condition number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .bvp import BandedLU, SingularSystemError
from .model import Grid, GridFn, ModelError, Potential, RatchetParams, well_integrals
from .stationary import (
    KL,
    KU,
    STRICT_SLACK,
    DensityPair,
    Direction,
    assemble,
    chain_slack,
    sg_coefficients,
    solve_collaborative,
    solve_stationary,
    transport_verdict,
)


class ConvergenceError(ArithmeticError):
    def __init__(self, message, state=None, history=None):
        super().__init__(message)
        self.state = state
        self.history = history


@dataclass(frozen=True)
class TransientState:
    pair: DensityPair
    t: float = 0.0
    step_count: int = 0

    @classmethod
    def uniform(cls, grid: Grid) -> "TransientState":
        half = GridFn(grid, np.full(grid.n, 0.5))
        return cls(DensityPair(half, half))


class RandomFlashingStepper:
    """Factor ``I + dt A`` once and advance states with it."""

    def __init__(self, params: RatchetParams, dt: float):
        if not dt > 0:
            raise ModelError(f"time step must be positive, got {dt}")
        self.params, self.dt = params, dt
        self.op = assemble(params, params.psi_alt)
        ab = dt * self.op.ab
        ab[KU] += 1.0
        self._lu = BandedLU(ab, KL, KU)

    def advance(self, u: np.ndarray) -> np.ndarray:
        v = self._lu.solve(u)
        m_new = self.op.mass(v)
        return v * (self.op.mass(u) / m_new) if m_new != 0 else v

    def step(self, state: TransientState) -> TransientState:
        u = self.advance(state.pair.stacked())
        pair = DensityPair.from_stacked(self.params.grid, u)
        return TransientState(pair, state.t + self.dt, state.step_count + 1)


def step_random_flashing(state: TransientState, dt: float, params: RatchetParams) -> TransientState:
    return RandomFlashingStepper(params, dt).step(state)


@dataclass
class Relaxation:
    state: TransientState
    history: list = field(default_factory=list)
    records: list = field(default_factory=list)
    max_mass_drift: float = 0.0

    @property
    def final_gap(self) -> float:
        return self.history[-1]


def run_to_stationary(
    params: RatchetParams,
    dt: float = 1e-3,
    tol: float = 1e-7,
    max_steps: int = 200_000,
    initial: TransientState | None = None,
    record_every: int = 0,
) -> Relaxation:
    """Integrate until the L1 gap to the stationary pair drops below ``tol``.

    ``history`` holds the gap before the first step and after every step.
    ``records`` (every ``record_every`` steps) holds
    ``(t, mass, gap, p_wells, P_wells)`` rows for time-series output.
    """
    target = solve_stationary(params) if params.psi_alt is None else solve_collaborative(params)
    grid = params.grid
    state = initial or TransientState.uniform(grid)
    stepper = RandomFlashingStepper(params, dt)
    op = stepper.op
    w = grid.weights
    ref = target.stacked()
    u = state.pair.stacked()

    def gap(v):
        return float(w @ np.abs(v[0::2] - ref[0::2]) + w @ np.abs(v[1::2] - ref[1::2]))

    history = [gap(u)]
    records = []
    steps = 0
    mass = op.mass(u)
    drift = 0.0
    while history[-1] >= tol:
        if steps >= max_steps:
            final = TransientState(DensityPair.from_stacked(grid, u), state.t + steps * dt, state.step_count + steps)
            raise ConvergenceError(
                f"no convergence in {max_steps} steps; final L1 gap {history[-1]:.3e}", final, history
            )
        u = stepper.advance(u)
        steps += 1
        history.append(gap(u))
        new_mass = op.mass(u)
        drift = max(drift, abs(new_mass - mass))
        mass = new_mass
        if record_every and steps % record_every == 0:
            k = params.k
            records.append((state.t + steps * dt, new_mass, history[-1],
                            well_integrals(GridFn(grid, u[0::2]), k), well_integrals(GridFn(grid, u[1::2]), k)))
    final = TransientState(DensityPair.from_stacked(grid, u), state.t + steps * dt, state.step_count + steps)
    return Relaxation(final, history, records, drift)


@dataclass(frozen=True)
class FlashingSchedule:
    """Potential on during ``(nT, nT + T_tr]``, off during ``(nT + T_tr, (n+1)T]``."""

    T: float
    T_tr: float

    def __post_init__(self):
        if not 0 < self.T_tr < self.T:
            raise ModelError(f"need 0 < T_tr < T, got T={self.T}, T_tr={self.T_tr}")

    def h(self, t: float) -> int:
        # t = nT belongs to the preceding off interval
        phase = math.fmod(t, self.T)
        return 1 if 0 < phase <= self.T_tr else 0


class DeterministicFlashing:
    """Single-density ratchet whose potential is switched by a schedule."""

    def __init__(self, potential: Potential, sigma: float, dt: float):
        if not sigma > 0 or not dt > 0:
            raise ModelError("sigma and dt must be positive")
        self.potential, self.sigma, self.dt = potential, sigma, dt
        grid = potential.grid
        self.grid = grid
        self._factors = {}
        for on in (0, 1):
            expo = potential.values / sigma if on else np.zeros(grid.n)
            lo, di, up = sg_coefficients(sigma, expo, grid.h, grid.weights)
            dl, d, du = dt * lo[1:], 1.0 + dt * di, dt * up[:-1]
            dl_, d_, du_, du2, ipiv, info = lapack.dgttrf(dl, d, du)
            if info:
                raise SingularSystemError(f"tridiagonal factorization failed (info={info})")
            self._factors[on] = (dl_, d_, du_, du2, ipiv)

    def step(self, rho: np.ndarray, on: int) -> np.ndarray:
        dl, d, du, du2, ipiv = self._factors[on]
        x, info = lapack.dgttrs(dl, d, du, du2, ipiv, rho)
        if info:
            raise SingularSystemError(f"tridiagonal solve failed (info={info})")
        w = self.grid.weights
        m_new = w @ x
        return x * ((w @ rho) / m_new) if m_new != 0 else x

    def run(self, rho: np.ndarray, n_steps: int, on: int) -> np.ndarray:
        for _ in range(n_steps):
            rho = self.step(rho, on)
        return rho

    def cycle(self, rho: np.ndarray, schedule: FlashingSchedule) -> np.ndarray:
        n_on = int(round(schedule.T_tr / self.dt))
        n_off = int(round((schedule.T - schedule.T_tr) / self.dt))
        return self.run(self.run(rho, n_on, 1), n_off, 0)


def step_deterministic_flashing(
    state: GridFn, t: float, dt: float, potential: Potential, sigma: float, schedule: FlashingSchedule
) -> GridFn:
    """One implicit step from ``t`` to ``t + dt``; the switch is read at ``t + dt``."""
    model = DeterministicFlashing(potential, sigma, dt)
    return GridFn(state.grid, model.step(state.values, schedule.h(t + dt)))


@dataclass(frozen=True)
class CycleAsymptotics:
    rho: GridFn
    wells: np.ndarray
    cycles: int
    last_change: float
    direction: Direction


def chain_direction(masses: np.ndarray, slack: float = STRICT_SLACK) -> Direction:
    if chain_slack(masses) > slack:
        return Direction.LEFT
    if chain_slack(-masses) > slack:
        return Direction.RIGHT
    return Direction.INDETERMINATE


def cycle_asymptotics(
    potential: Potential,
    sigma: float,
    schedule: FlashingSchedule,
    dt: float = 1e-3,
    tol: float = 1e-8,
    max_cycles: int = 2000,
) -> CycleAsymptotics:
    """Iterate the cycle map from the uniform density until cycle-end states settle."""
    model = DeterministicFlashing(potential, sigma, dt)
    grid = potential.grid
    w = grid.weights
    rho = np.ones(grid.n)
    for cycle in range(1, max_cycles + 1):
        nxt = model.cycle(rho, schedule)
        change = float(w @ np.abs(nxt - rho))
        rho = nxt
        if change < tol:
            f = GridFn(grid, rho)
            wells = well_integrals(f, potential.k)
            return CycleAsymptotics(f, wells, cycle, change, chain_direction(wells))
    raise ConvergenceError(f"cycle map did not settle in {max_cycles} cycles (last change {change:.3e})")


@dataclass(frozen=True)
class DirectionComparison:
    random_direction: Direction
    deterministic_direction: Direction
    agree: bool | None
    S: float
    deterministic_wells: np.ndarray


def compare_directions(
    params: RatchetParams,
    schedule: FlashingSchedule,
    sigma: float | None = None,
    dt: float = 1e-3,
    tol: float = 1e-8,
) -> DirectionComparison:
    """Transport direction of the random model versus the switched model.

    The switched model runs with potential ``psi`` and diffusivity
    ``sigma / kappa`` by default, i.e. the attached-state dynamics in time
    units of ``1/kappa``.  ``agree`` is None when either side is indeterminate.
    """
    verdict = transport_verdict(params)
    det_sigma = params.sigma / params.kappa if sigma is None else sigma
    asym = cycle_asymptotics(params.potential, det_sigma, schedule, dt, tol)
    rd, dd = verdict.direction, asym.direction
    agree = None if Direction.INDETERMINATE in (rd, dd) else rd == dd
    return DirectionComparison(rd, dd, agree, verdict.S, asym.wells)
