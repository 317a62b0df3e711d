"""Acceptance checks with pinned thresholds and runtime budgets.

Each ``check_*`` function returns a :class:`CriterionResult`; ``run_all``
executes them in order.  ``ratchet-lab selftest`` and
``tests/test_acceptance.py`` are thin wrappers around this module.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bvp import SLOperator, solve_sl_neumann
from .config import DEFAULT_KAPPAS, DEFAULT_SIGMAS
from .diffusive_mean import diffusive_mean, reflection_check
from .experiments import sweep_points
from .fixtures import conjugate_params, random_params, sawtooth_params, symmetric_params, transport_fixture
from .model import Grid, GridFn, make_peaked_rate, shift_differences, well_integrals
from .particles import compare_histogram, simulate_particles
from .squeezing import green_basis, squeeze_solution, transition_matrix
from .stationary import Direction, solve_stationary, transport_verdict, well_mass_report
from .transient import FlashingSchedule, compare_directions, run_to_stationary


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float
    budget: float | None
    detail: str
    info: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        budget = f" (budget {self.budget:g} s)" if self.budget else ""
        return f"[{status}] criterion {self.number:2d} {self.name}: {self.detail}; {self.seconds:.2f} s{budget}"


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def _result(number, name, ok, timer, budget, detail, **info) -> CriterionResult:
    in_budget = budget is None or timer.seconds < budget
    if not in_budget:
        detail += "; over runtime budget"
    return CriterionResult(number, name, bool(ok and in_budget), timer.seconds, budget, detail, info)


def check_symmetric_mean() -> CriterionResult:
    g = Grid(2001)
    phi = GridFn(g, np.ones(g.n))
    with _Timer() as t:
        s = diffusive_mean(phi).s
    return _result(1, "diffusive mean of constant phi", abs(s - 0.5) <= 1e-6, t, 0.1, f"s = {s:.12f}")


def check_biased_mean() -> CriterionResult:
    g = Grid(2001)
    phi = GridFn(g, 1.0 + g.nodes)
    with _Timer() as t:
        s, s_tilde = reflection_check(phi)
    ok = s > 0.5 + 1e-4 and abs(s + s_tilde - 1.0) <= 1e-8
    return _result(2, "diffusive mean of 1+x", ok, t, 0.5, f"s = {s:.10f}, s + s~ - 1 = {s + s_tilde - 1:.2e}")


def check_delta_limit() -> CriterionResult:
    g = Grid(2001)
    with _Timer() as t:
        errs = []
        for w in (0.05, 0.02, 0.01):
            phi = make_peaked_rate(1, 0.7, w, 1e-3, 1.0, g).samples
            errs.append(abs(diffusive_mean(phi).s - 0.7))
    ok = errs[0] > errs[1] > errs[2] and errs[2] < 0.01
    return _result(3, "delta limit of the diffusive mean", ok, t, 1.0,
                   "|s - 0.7| = " + ", ".join(f"{e:.3e}" for e in errs))


def check_ergodic_matrix(seed: int = 4) -> CriterionResult:
    rng = np.random.default_rng(seed)
    defects, mins = [], []
    ok = True
    with _Timer() as t:
        for _ in range(10):
            params = random_params(rng)
            try:
                P = transition_matrix(green_basis(params), params.nu, params.k)
            except ValueError:
                ok = False
                continue
            defects.append(P.row_sum_defect())
            mins.append(float(P.entries.min()))
    ok = ok and max(defects) <= 1e-10 and min(mins) > 0
    return _result(4, "ergodic transition matrices", ok, t, 5.0,
                   f"max row-sum defect {max(defects):.2e}, min entry {min(mins):.3e}")


def check_squeeze_gap() -> CriterionResult:
    params = transport_fixture()
    with _Timer() as t:
        sol = squeeze_solution(params)
        S = transport_verdict(params).S
        at_S = squeeze_solution(params, minimum=S)
    bound_ok = sol.gamma > 0 and sol.Q_gap >= sol.M * sol.gamma - 1e-8
    sym_ok = abs(at_S.Q_gap) <= 1e-8 and float(np.max(np.abs(shift_differences(at_S.Q, params.k)))) <= 1e-8
    return _result(5, "squeezing gap", bound_ok and sym_ok, t, 2.0,
                   f"gamma = {sol.gamma:.4e}, Q gap {sol.Q_gap:.4e} >= M*gamma = {sol.M * sol.gamma:.4e}; "
                   f"at a = S max |Q(x) - Q(x+1/k)| = "
                   f"{np.max(np.abs(shift_differences(at_S.Q, params.k))):.1e}")


def check_conjugate_rates() -> CriterionResult:
    params = conjugate_params()
    with _Timer() as t:
        pair = solve_stationary(params)
        wells = well_integrals(pair.p + pair.P, params.k)
    k = params.k
    well_err = float(np.max(np.abs(wells - 1.0 / k)))
    spread = float(np.ptp(pair.P.values))
    return _result(6, "conjugate rates", well_err <= 1e-6 and spread <= 1e-8, t, 2.0,
                   f"max |well mass - 1/k| = {well_err:.2e}, spread of P = {spread:.2e}")


def check_sweep_chains() -> CriterionResult:
    params = transport_fixture()
    with _Timer() as t:
        points = sweep_points(params, DEFAULT_SIGMAS, DEFAULT_KAPPAS)
        strict = [p for p in points if p.chain_p and p.chain_P and p.shift_P_ok]
        first = strict[0] if strict else None
        reversed_ok = False
        if first is not None:
            mirrored = params.reflected().replace(sigma=first.sigma, kappa=first.kappa)
            rep = well_mass_report(solve_stationary(mirrored), params.k)
            reversed_ok = rep.backward and not (rep.chain_p or rep.chain_P or rep.shift_P_ok)
    ok = first is not None and reversed_ok
    detail = (f"{len(strict)}/{len(points)} lattice points strict; first (sigma, kappa) = "
              f"({first.sigma:g}, {first.kappa:g}), reflected instance reversed: {reversed_ok}"
              if first else "no strict pair found")
    return _result(7, "well-mass chains on the sweep", ok, t, 60.0, detail, n_points=len(points))


def _asymptotic_direction(points) -> Direction | None:
    # smallest sigma first, then largest kappa: the strict pair deepest into the regime
    for p in sorted(points, key=lambda p: (p.sigma, -p.kappa)):
        if p.chain_p and p.chain_P and p.shift_P_ok:
            return Direction.LEFT
        if p.reversed_ok:
            return Direction.RIGHT
    return None


def _first_direction(points) -> Direction | None:
    for p in points:
        if p.chain_p and p.chain_P and p.shift_P_ok:
            return Direction.LEFT
        if p.reversed_ok:
            return Direction.RIGHT
    return None


def check_verdict_consistency(seed: int = 8, wanted: int = 20, max_draws: int = 60) -> CriterionResult:
    rng = np.random.default_rng(seed)
    agree = first_agree = used = draws = 0
    rows = []
    with _Timer() as t:
        while used < wanted and draws < max_draws:
            draws += 1
            params = random_params(rng)
            verdict = transport_verdict(params)
            if verdict.direction is Direction.INDETERMINATE:
                continue
            points = sweep_points(params, DEFAULT_SIGMAS, DEFAULT_KAPPAS)
            d = _asymptotic_direction(points)
            if d is None:
                continue
            used += 1
            agree += d is verdict.direction
            first_agree += _first_direction(points) is verdict.direction
            rows.append((params.k, params.a, verdict.S, str(verdict.direction), str(d)))
    ok = used == wanted and agree == wanted
    return _result(8, "verdict consistency", ok, t, 600.0,
                   f"{agree}/{used} configs agree with sign(S - a) (draws: {draws}; "
                   f"first lattice pair agrees in {first_agree}/{used})", rows=rows)


def relaxation_time(history, dt: float) -> float:
    """``1/rate`` of the exponential decay fitted on the tail half of an L1-gap history."""
    h = np.asarray(history)
    mid = len(h) // 2
    rate = math.log(h[mid] / h[-1]) / ((len(h) - 1 - mid) * dt)
    return 1.0 / rate


def check_dynamic_static() -> CriterionResult:
    params = transport_fixture()
    with _Timer() as t:
        rel = run_to_stationary(params, dt=1e-3, tol=1e-6)
    tail = np.asarray(rel.history[len(rel.history) // 2:])
    monotone = bool(np.all(np.diff(tail) < 0))
    ok = rel.final_gap < 1e-6 and rel.max_mass_drift <= 1e-12 and monotone
    return _result(9, "dynamic-static consistency", ok, t, 60.0,
                   f"final L1 gap {rel.final_gap:.2e} after t = {rel.state.t:.3f}, "
                   f"max per-step mass drift {rel.max_mass_drift:.1e}, tail monotone: {monotone}",
                   relaxation_time=relaxation_time(rel.history, 1e-3))


def check_monte_carlo(seed: int = 10, replicates: int = 32, dt: float = 2e-3) -> CriterionResult:
    params = transport_fixture()
    with _Timer() as t:
        rel = run_to_stationary(params, dt=1e-3, tol=1e-6)
        tau = relaxation_time(rel.history, 1e-3)
        t_end = math.ceil(5 * tau / dt) * dt
        ref = solve_stationary(params)
        k = params.k
        hist = simulate_particles(params, 100_000, t_end, dt, seed)
        cmp = compare_histogram(hist, ref, k)
        mean_dev = {}
        for n in (10_000, 40_000):
            devs = [
                compare_histogram(simulate_particles(params, n, t_end, dt, seed + 1000 * r + n), ref, k)
                .max_well_deviation
                for r in range(1, replicates + 1)
            ]
            mean_dev[n] = float(np.mean(devs))
    ratio = mean_dev[10_000] / mean_dev[40_000]
    ok = cmp.passed and 1.4 <= ratio <= 2.6
    worst = float(np.max(np.abs(cmp.deviations) / cmp.standard_errors))
    return _result(10, "Monte Carlo oracle", ok, t, 300.0,
                   f"n=1e5: worst well {worst:.2f} SE (t_end {t_end:.3f} = 5 x tau {tau:.3f}); "
                   f"mean max deviation 1e4 -> 4e4 shrinks x{ratio:.2f}")


def check_model_disagreement(dt: float = 1e-3) -> CriterionResult:
    schedule = FlashingSchedule(3.0, 1.0)
    cases = [
        ("peaked s*=0.15, a=0.2", sawtooth_params(a=0.2, s_star=0.15, sigma=0.01), False),
        ("symmetric, a=0.2", symmetric_params(a=0.2), True),
        ("symmetric, a=0.3", symmetric_params(a=0.3), True),
    ]
    parts, ok = [], True
    with _Timer() as t:
        for label, params, expect in cases:
            c = compare_directions(params, schedule, dt=dt)
            ok = ok and c.agree is expect
            parts.append(f"{label}: random {c.random_direction}, switched {c.deterministic_direction}")
    return _result(11, "random versus switched flashing", ok, t, 120.0, "; ".join(parts))


def check_convergence() -> CriterionResult:
    def error(n):
        g = Grid(n)
        x = g.nodes
        u = np.cos(np.pi * x) + 0.5 * np.cos(3 * np.pi * x)
        upp = -(np.pi**2) * np.cos(np.pi * x) - 4.5 * np.pi**2 * np.cos(3 * np.pi * x)
        phi = 2.0 + np.sin(2 * np.pi * x)
        sol = solve_sl_neumann(SLOperator(GridFn(g, phi)), phi * u - upp)
        return float(np.max(np.abs(sol.values - u)))

    with _Timer() as t:
        ratio = error(1001) / error(2001)
        s = [diffusive_mean(GridFn(Grid(n), 1.0 + Grid(n).nodes)).s for n in (1001, 2001)]
    ok = abs(ratio - 4.0) <= 0.6 and abs(s[0] - s[1]) < 1e-5
    return _result(12, "discretization convergence", ok, t, None,
                   f"error ratio {ratio:.4f}, |s(1001) - s(2001)| = {abs(s[0] - s[1]):.2e}")


CHECKS = (
    check_symmetric_mean,
    check_biased_mean,
    check_delta_limit,
    check_ergodic_matrix,
    check_squeeze_gap,
    check_conjugate_rates,
    check_sweep_chains,
    check_verdict_consistency,
    check_dynamic_static,
    check_monte_carlo,
    check_model_disagreement,
    check_convergence,
)


def run_all(echo=print) -> list[CriterionResult]:
    results = []
    for check in CHECKS:
        r = check()
        if echo:
            echo(r.line())
        results.append(r)
    return results
