"""``ratchet-lab`` command line.

Exit codes: 0 success, 1 config error, 2 solver failure, 3 self-test failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .model import ModelError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_SELFTEST = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ratchet-lab", description="Two-state flashing ratchet experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run the model named in a config"),
                        ("sweep", "sweep sigma x kappa and emit the first satisfying pair")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="TOML config file")
        p.add_argument("--grid-n", type=int, help="override the number of grid nodes")
        p.add_argument("--out", help="override output_dir")
        p.add_argument("--seed", type=int, help="override the seed")
    st = sub.add_parser("selftest", help="run the acceptance suite")
    st.add_argument("--only", type=int, nargs="*", help="criterion numbers to run (default: all)")
    return ap


def _selftest(only) -> int:
    from .acceptance import CHECKS

    failed = 0
    for number, check in enumerate(CHECKS, 1):
        if only and number not in only:
            continue
        r = check()
        print(r.line(), flush=True)
        failed += not r.passed
    print(f"{'FAILED' if failed else 'OK'}: {failed} failing criteria")
    return EXIT_SELFTEST if failed else EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "selftest":
        return _selftest(args.only)

    from .experiments import run_experiment, run_sweep_experiment

    try:
        cfg = load_config(args.config).with_overrides(args.grid_n, args.out, args.seed)
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "run":
            summary = run_experiment(cfg)
        else:
            if cfg.model not in ("random-flashing", "collaborative"):
                print(f"config error: {args.config}: model: sweeps need a two-state model, got {cfg.model!r}",
                      file=sys.stderr)
                return EXIT_CONFIG
            summary = run_sweep_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelError as exc:
        print(f"config error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _report(summary, cfg.output_dir)
    return EXIT_OK


def _report(summary: dict, out) -> None:
    lines = [f"model {summary['model']} -> {out}"]
    v = summary.get("verdict") or summary.get("sweep", {}).get("verdict")
    if v:
        lines.append(f"  S = {v['S']:.6f}, a = {v['a']:.6f}, direction {v['direction']}")
    if "chains" in summary:
        c = summary["chains"]
        lines.append(f"  chains p {c['chain_p']}, P {c['chain_P']}, shift {c['shift_P_ok']}, "
                     f"margin {c['min_margin']:.3e}")
    if "deterministic_direction" in summary:
        lines.append(f"  switched potential: {summary['deterministic_direction']} after {summary['cycles']} cycles; "
                     f"agree with random flashing: {summary['agree']}")
    if "within_3_se" in summary:
        lines.append(f"  particles: max well deviation {summary['max_well_deviation']:.3e}, "
                     f"within 3 SE: {summary['within_3_se']}")
    if "sweep" in summary:
        s = summary["sweep"]
        lines.append(f"  sweep: {s['forward_pairs']} forward / {s['reversed_pairs']} reversed of {s['points']}; "
                     f"first pair {s['first_pair']}, best margin {s['best_margin']:.3e}")
    print("\n".join(lines))


if __name__ == "__main__":
    sys.exit(main())
