"""Command-line front end.

Subcommands:
  solve         one seeded instance, prints a per-algorithm report
  sweep         Monte-Carlo sweep over alpha / fov / eta, or a convergence
                trace, emitted as CSV
  oracle-check  tiny-instance validation of the solver against the
                brute-force grid oracle

Exit codes: 0 success, 2 configuration error, 3 everything infeasible.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import ConfigError, ScenarioConfig, load_config
from .experiments import (run_sweep, run_trial, selected_algorithms,
                          solver_options, write_csv)
from .iterative import solve_weighted
from .oracle import OracleInfeasibleError, grid_search
from .experiments import build_instance

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def _add_common(parser):
    parser.add_argument("--config", metavar="PATH", default=None,
                        help="flat key=value configuration file")
    parser.add_argument("--algorithm", choices=["iterative", "baseline", "oracle", "all"],
                        default=None, help="override the configured algorithm")
    parser.add_argument("--trials", type=int, default=None, metavar="N")
    parser.add_argument("--seed", type=int, default=None, metavar="N")
    parser.add_argument("--out", default=None, metavar="PATH",
                        help="output file (default: stdout)")
    parser.add_argument("--csv", action="store_true", default=True,
                        help="emit CSV output (default)")


def _load(args) -> ScenarioConfig:
    config = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if args.algorithm is not None:
        overrides["algorithm"] = args.algorithm
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    return replace(config, **overrides) if overrides else config


def _cmd_solve(args) -> int:
    config = _load(args)
    trial = run_trial(config, 0)
    any_ok = False
    for algo, res in trial.results.items():
        print(f"[{algo}] status={res.status} objective={res.objective:.12g} "
              f"sum_rate_bps={res.sum_rate:.12g} energy_W={res.total_energy:.12g} "
              f"iterations={res.iterations}")
        if res.status in ("ok", "max_iter"):
            any_ok = True
    return EXIT_OK if any_ok else EXIT_INFEASIBLE


def _cmd_sweep(args) -> int:
    config = _load(args)
    header, rows = run_sweep(config, args.kind)
    write_csv(header, rows, config.out)
    statuses = [row[-1] for row in rows]
    if statuses and all(s == "infeasible" for s in statuses):
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_oracle_check(args) -> int:
    config = _load(args)
    base = replace(config, ap_rows=2, ap_cols=2, n_ehu=1, n_iu=1)
    worst_gap = 0.0
    checked = 0
    for k in range(args.instances):
        n_iu = 1 + (k % 2)
        cfg = replace(base, n_iu=n_iu)
        alpha = [0.1, 0.3, 0.5, 0.7, 0.9][k % 5]
        qos = cfg.qos_at(alpha=alpha)
        _, channel, precoder, params = build_instance(cfg, cfg.seed + k)
        try:
            _, oracle_obj = grid_search(channel, precoder, qos, params, alpha,
                                        args.grid_points)
        except OracleInfeasibleError:
            print(f"instance {k}: infeasible, skipped")
            continue
        report = solve_weighted(channel, precoder, qos, params, solver_options(cfg))
        gap = abs(report.objective - oracle_obj) / abs(oracle_obj)
        worst_gap = max(worst_gap, gap)
        checked += 1
        print(f"instance {k}: n_iu={n_iu} alpha={alpha} "
              f"solver={report.objective:.6g} oracle={oracle_obj:.6g} gap={gap:.3%}")
    if checked == 0:
        return EXIT_INFEASIBLE
    print(f"checked {checked} instances, worst gap {worst_gap:.3%}")
    return EXIT_OK if worst_gap <= 0.02 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vlc-slipt",
        description="Joint DC-bias and message-power allocation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a single seeded instance")
    _add_common(p_solve)
    p_solve.set_defaults(func=_cmd_solve)

    p_sweep = sub.add_parser("sweep", help="Monte-Carlo sweep, CSV output")
    p_sweep.add_argument("--kind", required=True,
                         choices=["alpha", "fov", "eta", "convergence"])
    _add_common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_oracle = sub.add_parser("oracle-check",
                              help="validate the solver on tiny instances")
    p_oracle.add_argument("--instances", type=int, default=5, metavar="N")
    p_oracle.add_argument("--grid-points", type=int, default=200, metavar="N")
    _add_common(p_oracle)
    p_oracle.set_defaults(func=_cmd_oracle_check)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
