"""Experiment orchestration and artifact writers.

Every artifact is a pure function of the config: floats are written with 17
significant digits, JSON keys are sorted, and sweep results are sorted by
lattice position before anything touches the disk.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import tomli_w

from .config import DEFAULT_KAPPAS, DEFAULT_SIGMAS, ExperimentConfig
from .diffusive_mean import reflection_check
from .model import RatchetParams, well_integrals
from .particles import RNG_ALGORITHM, compare_histogram, simulate_particles, worker_count
from .squeezing import squeeze_solution
from .stationary import (
    Direction,
    solve_collaborative,
    solve_stationary,
    transport_verdict,
    well_mass_report,
)
from .transient import compare_directions, cycle_asymptotics, run_to_stationary

FIXTURE_MARGIN = 1e-6


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, Direction):
        return v.value
    return v


def write_summary(path: Path, summary: dict) -> None:
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")


# -- single runs -------------------------------------------------------------


def _verdict_summary(params: RatchetParams) -> dict:
    v = transport_verdict(params)
    return {"S": v.S, "a": v.a, "margin": v.margin, "direction": v.direction, "h": v.h}


def _run_random(cfg: ExperimentConfig, params: RatchetParams, out: Path) -> dict:
    collaborative = cfg.model == "collaborative"
    solve = solve_collaborative if collaborative else solve_stationary
    pair, diag = solve(params, with_diagnostics=True)
    rep = well_mass_report(pair, params.k)
    sq = squeeze_solution(params)
    g = params.grid
    write_csv(out / "densities.csv", ["x", "p", "P", "Q"],
              zip(g.nodes, pair.p.values, pair.P.values, sq.Q.values))
    write_csv(out / "wells.csv", ["i", "p_hat", "P_hat", "xi"],
              zip(range(1, params.k + 1), rep.p_hat, rep.P_hat, sq.xi))
    summary = {
        "verdict": _verdict_summary(params),
        "chains": {
            "chain_p": rep.chain_p,
            "chain_P": rep.chain_P,
            "shift_P_ok": rep.shift_P_ok,
            "min_margin": rep.min_margin,
            "direction": rep.direction,
        },
        "squeeze": {"gamma": sq.gamma, "M": sq.M, "Q_gap": sq.Q_gap, "residual": sq.residual},
        "stationary": {"residual": diag.residual, "dropped_row_residual": diag.dropped_row_residual,
                       "mass": pair.mass()},
    }
    if "transient" in cfg.raw:
        every = cfg.number("transient", "record_every", 100, integer=True)
        rel = run_to_stationary(
            params,
            dt=cfg.number("transient", "dt", 1e-3),
            tol=cfg.number("transient", "tol", 1e-7),
            max_steps=cfg.number("transient", "max_steps", 200_000, integer=True),
            record_every=every,
        )
        k = params.k
        write_csv(out / "timeseries.csv",
                  ["t", "mass", "l1_gap"] + [f"p_hat_{i}" for i in range(1, k + 1)]
                  + [f"P_hat_{i}" for i in range(1, k + 1)],
                  ([t, m, gap, *pw, *Pw] for t, m, gap, pw, Pw in rel.records))
        summary["transient"] = {"steps": rel.state.step_count, "t": rel.state.t,
                                "final_gap": rel.final_gap, "max_mass_drift": rel.max_mass_drift}
    return summary


def _run_squeezing(cfg, params, out) -> dict:
    sq = squeeze_solution(params)
    g = params.grid
    write_csv(out / "densities.csv", ["x", "Q"], zip(g.nodes, sq.Q.values))
    write_csv(out / "wells.csv", ["i", "xi"], zip(range(1, params.k + 1), sq.xi))
    return {
        "verdict": _verdict_summary(params),
        "squeeze": {"gamma": sq.gamma, "M": sq.M, "Q_gap": sq.Q_gap, "residual": sq.residual,
                    "transition_matrix": sq.matrix.entries},
    }


def _run_diffusive_mean(cfg, params, out) -> dict:
    m = params.grid.period_cells(params.k)
    s, s_tilde = reflection_check(params.nu.samples.restrict(0, m), params.varsigma)
    return {"verdict": _verdict_summary(params), "reflected_mean": s_tilde, "reflection_sum": s + s_tilde}


def _run_deterministic(cfg, params, out) -> dict:
    schedule = cfg.schedule()
    t = cfg.table("schedule")
    sigma = cfg.number("schedule", "sigma", params.sigma / params.kappa)
    dt = cfg.number("schedule", "dt", 1e-3)
    tol = cfg.number("schedule", "tol", 1e-8)
    asym = cycle_asymptotics(params.potential, sigma, schedule, dt, tol,
                             cfg.number("schedule", "max_cycles", 2000, integer=True))
    cmp = compare_directions(params, schedule, sigma if "sigma" in t else None, dt, tol)
    g = params.grid
    write_csv(out / "densities.csv", ["x", "rho"], zip(g.nodes, asym.rho.values))
    write_csv(out / "wells.csv", ["i", "rho_hat"], zip(range(1, params.k + 1), asym.wells))
    return {
        "schedule": {"T": schedule.T, "T_tr": schedule.T_tr, "sigma": sigma, "dt": dt},
        "cycles": asym.cycles,
        "last_change": asym.last_change,
        "deterministic_direction": asym.direction,
        "random_direction": cmp.random_direction,
        "agree": cmp.agree,
        "verdict": _verdict_summary(params),
    }


def _run_particles(cfg, params, out) -> dict:
    n = cfg.number("particles", "n", 100_000, integer=True)
    t_end = cfg.number("particles", "t_end", 6.0)
    dt = cfg.number("particles", "dt", 2e-3)
    hist = simulate_particles(params, n, t_end, dt, cfg.seed)
    ref = solve_stationary(params)
    cmp = compare_histogram(hist, ref, params.k)
    k = params.k
    write_csv(out / "wells.csv", ["i", "p_hat", "P_hat"], zip(range(1, k + 1), hist.p_wells, hist.P_wells))
    e = hist.bin_edges
    write_csv(out / "histogram.csv", ["x_left", "x_right", "p", "P"],
              zip(e[:-1], e[1:], hist.p_density, hist.P_density))
    ref_w = np.concatenate([well_integrals(ref.p, k), well_integrals(ref.P, k)])
    states = ["attached"] * k + ["detached"] * k
    wells = list(range(1, k + 1)) * 2
    write_csv(out / "comparison.csv", ["i", "state", "empirical", "reference", "deviation", "standard_error"],
              ([i, s, e_, r, d, se] for i, s, e_, r, d, se in
               zip(wells, states, hist.wells, ref_w, cmp.deviations, cmp.standard_errors)))
    return {
        "particles": {**hist.metadata, "n": n, "rng": RNG_ALGORITHM},
        "max_well_deviation": cmp.max_well_deviation,
        "within_3_se": cmp.passed,
        "verdict": _verdict_summary(params),
    }


_RUNNERS = {
    "random-flashing": _run_random,
    "collaborative": _run_random,
    "squeezing": _run_squeezing,
    "diffusive-mean": _run_diffusive_mean,
    "deterministic-flashing": _run_deterministic,
    "particles": _run_particles,
}


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run the model named in ``cfg`` and write its artifacts to ``cfg.output_dir``."""
    cfg.validate()
    params = cfg.params()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"model": cfg.model, "seed": cfg.seed, "grid_n": params.grid.n, "k": params.k}
    summary.update(_RUNNERS[cfg.model](cfg, params, out))
    if cfg.sweep_sigmas and cfg.model in ("random-flashing", "collaborative"):
        summary["sweep"] = run_sweep(cfg, params=params)
    write_summary(out / "summary.json", summary)
    return summary


# -- sweeps -------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    sigma: float
    kappa: float
    chain_p: bool
    chain_P: bool
    shift_P_ok: bool
    min_margin: float
    reversed_ok: bool
    reversed_margin: float

    @property
    def forward(self) -> bool:
        return self.chain_p and self.chain_P and self.shift_P_ok and self.min_margin > FIXTURE_MARGIN

    @property
    def backward(self) -> bool:
        return self.reversed_ok and self.reversed_margin > FIXTURE_MARGIN


def sweep_points(params: RatchetParams, sigmas, kappas, workers: int | None = None) -> list[SweepPoint]:
    """Stationary well-mass chains on the lattice, ordered by decreasing sigma then increasing kappa."""
    lattice = [(s, c) for s in sorted(sigmas, reverse=True) for c in sorted(kappas)]
    solve = solve_stationary if params.psi_alt is None else solve_collaborative

    def evaluate(sc):
        s, c = sc
        p = params.replace(sigma=s, kappa=c)
        rep = well_mass_report(solve(p), p.k)
        return SweepPoint(s, c, rep.chain_p, rep.chain_P, rep.shift_P_ok, rep.min_margin,
                          rep.backward, rep.reversed_min_margin)

    n = min(workers or worker_count(), len(lattice))
    if n > 1:
        with ThreadPoolExecutor(n) as pool:
            results = list(pool.map(evaluate, lattice))
    else:
        results = [evaluate(sc) for sc in lattice]
    order = {sc: i for i, sc in enumerate(lattice)}
    return sorted(results, key=lambda r: order[(r.sigma, r.kappa)])


def _fixture_document(cfg: ExperimentConfig, point: SweepPoint) -> dict:
    doc = {k: v for k, v in cfg.raw.items() if k != "sweep"}
    doc["coefficients"] = {**cfg.raw.get("coefficients", {}), "sigma": point.sigma, "kappa": point.kappa}
    if cfg.grid_n is not None:
        doc["grid"] = {"n": cfg.grid_n}
    doc["seed"] = cfg.seed
    return doc


def run_sweep(cfg: ExperimentConfig, params: RatchetParams | None = None) -> dict:
    """Sweep ``sigma x kappa``; write ``sweep.csv`` and the first satisfying pair as ``fixture.toml``."""
    params = params or cfg.validate().params()
    sigmas = cfg.sweep_sigmas or DEFAULT_SIGMAS
    kappas = cfg.sweep_kappas or DEFAULT_KAPPAS
    points = sweep_points(params, sigmas, kappas)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "sweep.csv", ["sigma", "kappa", "chain_p", "chain_P", "shift_P_ok", "min_margin"],
              ([p.sigma, p.kappa, p.chain_p, p.chain_P, p.shift_P_ok, p.min_margin] for p in points))
    first = next((p for p in points if p.forward or p.backward), None)
    best = max(points, key=lambda p: max(p.min_margin, p.reversed_margin))
    report = {
        "points": len(points),
        "forward_pairs": sum(p.forward for p in points),
        "reversed_pairs": sum(p.backward for p in points),
        "best_margin": max(best.min_margin, best.reversed_margin),
        "best_pair": [best.sigma, best.kappa],
        "verdict": _verdict_summary(params),
    }
    fixture = out / "fixture.toml"
    if first is None:
        report["first_pair"] = None
        report["direction"] = Direction.INDETERMINATE
        if fixture.exists():
            fixture.unlink()
    else:
        report["first_pair"] = [first.sigma, first.kappa]
        report["direction"] = Direction.LEFT if first.forward else Direction.RIGHT
        fixture.write_text(tomli_w.dumps(_fixture_document(cfg, first)))
    return report


def run_sweep_experiment(cfg: ExperimentConfig) -> dict:
    report = run_sweep(cfg)
    summary = {"model": cfg.model, "seed": cfg.seed, "sweep": report}
    write_summary(Path(cfg.output_dir) / "summary.json", summary)
    return summary

