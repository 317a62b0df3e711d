"""Well-mass chains across the sigma x kappa lattice for three sawtooth instances.

The third instance puts the attachment peak on the potential minimum, so no
strict chain should appear.

Prints one line per instance and writes ``<out>/lattice_<name>.csv``.
"""

import argparse
from pathlib import Path

from ratchet_lab.config import DEFAULT_KAPPAS, DEFAULT_SIGMAS
from ratchet_lab.experiments import sweep_points, write_csv
from ratchet_lab.fixtures import symmetric_params, transport_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/lattice")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = transport_fixture()
    instances = {
        "transport": base,
        "reflected": base.reflected(),
        "degenerate": symmetric_params(a=0.25, sigma=0.1),
    }
    for name, params in instances.items():
        pts = sweep_points(params, DEFAULT_SIGMAS, DEFAULT_KAPPAS)
        write_csv(out / f"lattice_{name}.csv",
                  ["sigma", "kappa", "forward", "backward", "min_margin", "reversed_margin"],
                  ([p.sigma, p.kappa, p.forward, p.backward, p.min_margin, p.reversed_margin] for p in pts))
        fwd, bwd = sum(p.forward for p in pts), sum(p.backward for p in pts)
        print(f"{name:10s} forward {fwd:3d}  backward {bwd:3d}  of {len(pts)}")


if __name__ == "__main__":
    main()
