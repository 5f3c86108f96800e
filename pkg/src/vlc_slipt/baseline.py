"""Equal-bias benchmark: blend the extreme feasible biases, then an LP.

Instead of weighting the two utilities, this approach weights the two
extreme equal-bias operating points: the smallest bias meeting every
harvested-energy floor (best for rate) and the largest bias leaving room
for the minimum message powers (best for energy).  The message powers for
the blended bias come from a linear program over the remaining headroom.
"""

from __future__ import annotations

import math

import numpy as np

from .config import PhysParams, QosSpec
from .iterative import SolverReport, _infeasible_report, _report_from, _all_ehu_report
from .numerics import LpProblem, NoRootError, newton_root, solve_lp
from .precoding import PrecoderSet
from .utility import Allocation, min_powers


class BaselineInfeasibleError(RuntimeError):
    """No equal bias satisfies the constraint set."""


def min_equal_bias(h_ehu: np.ndarray, qos: QosSpec, params: PhysParams) -> np.ndarray:
    """Smallest equal bias meeting every harvested-energy floor.

    For each EHU the scalar bias solves
    ``c1 * b * ln(1 + c2 * b) = threshold`` with ``c1``, ``c2`` built from
    the summed channel row; the answer is the largest such root over the
    EHUs, floored at the midpoint of the LED linear region.
    """
    h_ehu = np.asarray(h_ehu, dtype=float)
    n_ap = h_ehu.shape[1] if h_ehu.ndim == 2 else 0
    roots = [0.0]
    for row, e_th in zip(h_ehu, qos.energy_thresholds):
        if e_th <= 0.0:
            continue
        gain_sum = float(np.sum(row))
        c1 = (params.fill_factor * params.conv_factor * params.led_power
              * params.thermal_voltage * gain_sum)
        c2 = params.conv_factor * params.led_power * gain_sum / params.dark_current
        if c1 <= 0.0:
            raise BaselineInfeasibleError("EHU with zero channel cannot harvest")

        def f(b, c1=c1, c2=c2, e_th=e_th):
            return c1 * b * math.log1p(c2 * b) - e_th

        def df(b, c1=c1, c2=c2):
            return c1 * math.log1p(c2 * b) + c1 * b * c2 / (1.0 + c2 * b)

        hi = 2.0 * params.bias_max
        if f(hi) < 0.0:
            raise BaselineInfeasibleError("energy floor unreachable for an EHU")
        try:
            root = newton_root(f, df, x0=0.5 * params.bias_max,
                               tol=1e-12 * e_th, bracket=(0.0, hi))
        except NoRootError as exc:
            raise BaselineInfeasibleError("energy floor unreachable") from exc
        if root > params.bias_max * (1.0 + 1e-9):
            raise BaselineInfeasibleError("required equal bias above the linear region")
        roots.append(root)
    level = max(params.bias_mid, max(roots))
    return np.full(n_ap, level)


def max_equal_bias(precoder: PrecoderSet, qos: QosSpec, params: PhysParams) -> np.ndarray:
    """Largest equal bias still admitting the minimum message powers."""
    p_min = min_powers(qos, params)
    load = precoder.squared @ p_min
    peak = float(np.max(load)) if load.size else 0.0
    level = min(params.bias_max,
                params.bias_max - math.sqrt(peak) / params.led_power)
    return np.full(precoder.n_ap, level)


def solve_baseline(channel, precoder: PrecoderSet, qos: QosSpec,
                   params: PhysParams, opts=None) -> SolverReport:
    """Blend the extreme equal biases by alpha, then allocate powers by LP.

    At ``alpha = 1`` the bias is the energy-driven minimum; at
    ``alpha = 0`` it is the rate-limited maximum and the powers stay at
    their minimum (all headroom goes to the DC component).  The LP
    maximizes the summed SNR subject to the per-AP headroom left by the
    blended bias, so leftover room is allowed (the transmit-power coupling
    is met with inequality rather than equality).
    """
    del opts  # single-shot method, no iteration knobs
    if precoder.n_iu == 0:
        return _all_ehu_report(channel, precoder, qos, params)
    try:
        b_min = min_equal_bias(channel.ehu_gains, qos, params)
    except BaselineInfeasibleError as exc:
        return _infeasible_report(str(exc))
    b_max = max_equal_bias(precoder, qos, params)
    if b_min[0] > b_max[0] * (1.0 + 1e-12):
        return _infeasible_report("no equal bias fits both constraint classes")

    bias = qos.alpha * b_min + (1.0 - qos.alpha) * b_max
    p_min = min_powers(qos, params)
    if qos.alpha == 0.0:
        powers = p_min
    else:
        headroom = (params.led_power * (params.bias_max - bias)) ** 2
        lp = LpProblem(
            c=np.full(precoder.n_iu, params.snr_coeff),
            A=precoder.squared,
            b=headroom,
            lo=p_min,
            hi=np.full(precoder.n_iu, np.inf),
        )
        sol = solve_lp(lp)
        if sol.status != "optimal":
            return _infeasible_report("power LP infeasible at the blended bias")
        powers = sol.x
    alloc = Allocation(bias=bias, powers=powers)
    report = _report_from(alloc, qos, channel, precoder, params,
                          iterations=1, converged=True,
                          trace=[], status="ok")
    report.trace = [(report.objective, 0.0)]
    return report
