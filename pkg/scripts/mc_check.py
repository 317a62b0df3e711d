"""Particle ensembles against the stationary solve at growing ensemble sizes."""

import argparse
from pathlib import Path

import numpy as np

from ratchet_lab.experiments import write_csv
from ratchet_lab.fixtures import transport_fixture
from ratchet_lab.particles import compare_histogram, simulate_particles
from ratchet_lab.stationary import solve_stationary


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[2_500, 10_000, 40_000, 160_000])
    ap.add_argument("--replicates", type=int, default=8)
    ap.add_argument("--t-end", type=float, default=6.0)
    ap.add_argument("--dt", type=float, default=2e-3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/mc")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = transport_fixture()
    ref = solve_stationary(params)
    rows = []
    for n in args.sizes:
        devs = [compare_histogram(simulate_particles(params, n, args.t_end, args.dt, args.seed + 7919 * r + n),
                                  ref, params.k).max_well_deviation for r in range(args.replicates)]
        m = float(np.mean(devs))
        rows.append([n, m, m * np.sqrt(n)])
        print(f"n = {n:7d}: mean max well deviation {m:.3e}, times sqrt(n) {m * np.sqrt(n):.3f}")
    write_csv(out / "mc.csv", ["n", "mean_max_deviation", "scaled"], rows)


if __name__ == "__main__":
    main()
