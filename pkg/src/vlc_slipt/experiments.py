"""Monte-Carlo trial orchestration, parameter sweeps, CSV emission.

Paired comparisons use common random numbers: within one trial index the
same user realization feeds every algorithm and every sweep value, so
curves differ only through the quantity being swept.  CSV output is
byte-stable across runs: fixed column order, 12 significant digits,
newline-terminated rows.
"""

from __future__ import annotations

import io
import sys
from dataclasses import dataclass, replace

import numpy as np

from .baseline import solve_baseline
from .channel import channel_matrix
from .config import ScenarioConfig
from .geometry import build_geometry
from .iterative import SolverOptions, solve_max_energy, solve_weighted
from .oracle import OracleInfeasibleError, grid_search
from .precoding import DegenerateChannelError, zf_precoder
from .utility import sum_rate, total_energy

_REDRAW_LIMIT = 10
_FEASIBLE_STATUSES = ("ok", "max_iter")


@dataclass
class AlgoResult:
    objective: float
    sum_rate: float
    total_energy: float
    iterations: int
    status: str


@dataclass
class TrialResult:
    trial_index: int
    seed: int
    results: dict  # algorithm name -> AlgoResult


def selected_algorithms(config: ScenarioConfig):
    if config.algorithm == "all":
        return ["iterative", "baseline"]
    return [config.algorithm]


def solver_options(config: ScenarioConfig) -> SolverOptions:
    return SolverOptions(max_iter=config.solver_max_iter, tol=config.solver_tol)


def build_instance(config: ScenarioConfig, seed: int, fov_deg=None):
    """Geometry, channel and precoder for one realization.

    Ill-conditioned IU channels are redrawn with a shifted seed, a bounded
    number of times, before the trial is declared failed.
    """
    params = config.phys_at(fov_deg)
    last_exc = None
    for attempt in range(_REDRAW_LIMIT):
        geometry = build_geometry(config, seed + attempt * 1_000_003)
        channel = channel_matrix(geometry, params)
        try:
            precoder = zf_precoder(channel.iu_gains)
        except DegenerateChannelError as exc:
            last_exc = exc
            continue
        return geometry, channel, precoder, params
    raise DegenerateChannelError(
        f"no well-conditioned draw within {_REDRAW_LIMIT} attempts") from last_exc


def _run_algorithm(algo, channel, precoder, qos, params, config):
    opts = solver_options(config)
    if algo == "iterative":
        report = (solve_max_energy(channel, precoder, qos, params, opts)
                  if qos.alpha == 0.0 else
                  solve_weighted(channel, precoder, qos, params, opts))
    elif algo == "baseline":
        report = solve_baseline(channel, precoder, qos, params)
    elif algo == "oracle":
        try:
            alloc, _ = grid_search(channel, precoder, qos, params, qos.alpha,
                                   config.oracle_grid_points)
        except (OracleInfeasibleError, ValueError) as exc:
            return AlgoResult(0.0, 0.0, 0.0, 0, f"infeasible ({exc})")
        rate = sum_rate(alloc.powers, params)
        energy = total_energy(alloc.bias, channel.ehu_gains, params)
        obj = qos.alpha * rate + (1.0 - qos.alpha) / qos.omega * energy
        return AlgoResult(obj, rate, energy, 1, "ok")
    else:
        raise ValueError(f"unknown algorithm '{algo}'")
    if report.status == "infeasible":
        return AlgoResult(0.0, 0.0, 0.0, report.iterations, "infeasible")
    return AlgoResult(report.objective, report.sum_rate, report.total_energy,
                      report.iterations, report.status)


def run_trial(config: ScenarioConfig, trial_index: int) -> TrialResult:
    """One seeded realization solved by every selected algorithm."""
    seed = config.seed + trial_index
    qos = config.qos_at()
    results = {}
    try:
        _, channel, precoder, params = build_instance(config, seed)
    except DegenerateChannelError:
        for algo in selected_algorithms(config):
            results[algo] = AlgoResult(0.0, 0.0, 0.0, 0, "failed")
        return TrialResult(trial_index, seed, results)
    for algo in selected_algorithms(config):
        results[algo] = _run_algorithm(algo, channel, precoder, qos, params, config)
    return TrialResult(trial_index, seed, results)


def _aggregate(rows_for_point):
    feasible = [r for r in rows_for_point if r.status in _FEASIBLE_STATUSES]
    if not feasible:
        return (0.0, 0.0, 0.0, 0, 0.0, "infeasible")
    return (
        float(np.mean([r.objective for r in feasible])),
        float(np.mean([r.sum_rate for r in feasible])),
        float(np.mean([r.total_energy for r in feasible])),
        len(feasible),
        float(np.mean([r.iterations for r in feasible])),
        "ok",
    )


def run_sweep(config: ScenarioConfig, kind: str):
    """Run one sweep and return ``(header, rows)`` ready for CSV emission."""
    algos = selected_algorithms(config)
    if kind == "alpha":
        points = list(config.alpha_list)
        label = "alpha"
    elif kind == "fov":
        points = list(config.fov_list)
        label = "fov_deg"
    elif kind == "eta":
        points = list(config.eta_list)
        label = "eta"
    elif kind == "convergence":
        return _convergence_trace(config)
    else:
        raise ValueError(f"unknown sweep kind '{kind}'")
    if not points:
        raise ValueError("swept list is empty")

    acc = {(p, a): [] for p in points for a in algos}
    for t in range(config.trials):
        seed = config.seed + t
        if kind == "alpha":
            try:
                _, channel, precoder, params = build_instance(config, seed)
            except DegenerateChannelError:
                for key in acc:
                    acc[key].append(AlgoResult(0.0, 0.0, 0.0, 0, "failed"))
                continue
            for p in points:
                qos = config.qos_at(alpha=p)
                for algo in algos:
                    acc[(p, algo)].append(
                        _run_algorithm(algo, channel, precoder, qos, params, config))
        elif kind == "fov":
            for p in points:
                try:
                    _, channel, precoder, params = build_instance(config, seed, fov_deg=p)
                except DegenerateChannelError:
                    for algo in algos:
                        acc[(p, algo)].append(AlgoResult(0.0, 0.0, 0.0, 0, "failed"))
                    continue
                qos = config.qos_at()
                for algo in algos:
                    acc[(p, algo)].append(
                        _run_algorithm(algo, channel, precoder, qos, params, config))
        else:  # eta: split the same user population differently
            n_users = config.n_users
            for p in points:
                n_ehu = int(round(p * n_users))
                n_iu = n_users - n_ehu
                cfg = replace(config, n_iu=n_iu, n_ehu=n_ehu)
                try:
                    _, channel, precoder, params = build_instance(cfg, seed)
                except DegenerateChannelError:
                    for algo in algos:
                        acc[(p, algo)].append(AlgoResult(0.0, 0.0, 0.0, 0, "failed"))
                    continue
                qos = cfg.qos_at()
                for algo in algos:
                    acc[(p, algo)].append(
                        _run_algorithm(algo, channel, precoder, qos, params, cfg))

    header = [label, "algo", "weighted_sum", "sum_rate_bps", "energy_W",
              "feasible_trials", "mean_iterations", "status"]
    rows = []
    for p in points:
        for algo in algos:
            ws, rate, energy, count, iters, status = _aggregate(acc[(p, algo)])
            rows.append([p, algo, ws, rate, energy, count, iters, status])
    return header, rows


def _convergence_trace(config: ScenarioConfig):
    """Per-iteration trace of a single solve (energy maximization run)."""
    alpha = config.alpha_list[0]
    qos = config.qos_at(alpha=alpha)
    _, channel, precoder, params = build_instance(config, config.seed)
    header = ["iteration", "algo", "objective", "bias_delta", "status"]
    rows = []
    for algo in selected_algorithms(config):
        if algo == "iterative":
            report = (solve_max_energy(channel, precoder, qos, params,
                                       solver_options(config))
                      if alpha == 0.0 else
                      solve_weighted(channel, precoder, qos, params,
                                     solver_options(config)))
        elif algo == "baseline":
            report = solve_baseline(channel, precoder, qos, params)
        else:
            continue
        for i, (obj, delta) in enumerate(report.trace, start=1):
            rows.append([i, algo, obj, delta, report.status])
    return header, rows


def format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def render_csv(header, rows) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(format_value(v) for v in row) + "\n")
    return out.getvalue()


def write_csv(header, rows, path: str = ""):
    text = render_csv(header, rows)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
