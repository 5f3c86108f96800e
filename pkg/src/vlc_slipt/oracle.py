"""Brute-force validation oracle and independent constraint audit.

Everything in this module recomputes rates, energies and the bias/power
coupling from first principles rather than calling the library's utility
functions, so it can catch sign and unit mistakes in the main code path.
"""

from __future__ import annotations

import math

import numpy as np

from .config import PhysParams, QosSpec
from .precoding import PrecoderSet
from .utility import Allocation


class OracleInfeasibleError(RuntimeError):
    """No grid point satisfies every constraint."""


def _rates_bps(powers, params: PhysParams):
    snr_per_watt = (math.e * params.conv_factor ** 2 * params.led_power ** 2
                    / (2.0 * math.pi * params.bandwidth_hz * params.noise_psd))
    return 0.5 * params.bandwidth_hz * np.log2(1.0 + snr_per_watt * powers)


def _energies_w(bias_rows, h_ehu, params: PhysParams):
    # bias_rows: (..., n_ap); returns (..., n_ehu)
    i_dc = params.conv_factor * params.led_power * (bias_rows @ h_ehu.T)
    open_circuit = params.thermal_voltage * np.log1p(i_dc / params.dark_current)
    return params.fill_factor * i_dc * open_circuit


def grid_search(channel, precoder: PrecoderSet, qos: QosSpec, params: PhysParams,
                alpha: float, grid_points_per_dim: int):
    """Exhaustive log-spaced search over the message-power box.

    Searching power space rather than bias space keeps the map single
    valued, and log spacing covers the many decades between the rate
    floors and the cap-limited maxima.  Only instances with at most two
    information users are accepted.  Returns ``(Allocation, objective)``
    for the best feasible grid point.
    """
    n_iu = precoder.n_iu
    if n_iu > 2:
        raise ValueError("grid oracle limited to at most two information users")
    if grid_points_per_dim < 2:
        raise ValueError("need at least two grid points per dimension")
    if n_iu == 0:
        raise ValueError("grid oracle needs at least one information user")

    beta = 0.5 * params.bandwidth_hz
    snr_per_watt = (math.e * params.conv_factor ** 2 * params.led_power ** 2
                    / (2.0 * math.pi * params.bandwidth_hz * params.noise_psd))
    p_floor = ((np.exp2(qos.rate_thresholds / beta) - 1.0)
               * 2.0 * math.pi * params.bandwidth_hz * params.noise_psd
               / (params.led_power ** 2 * math.e * params.conv_factor ** 2))
    p_cap = params.led_power ** 2 * (0.5 * (params.bias_max - params.bias_min)) ** 2
    col_max = np.maximum(precoder.squared.max(axis=0), 1e-300)
    p_ceil = p_cap / col_max

    axes = []
    for j in range(n_iu):
        lo = max(p_floor[j], p_ceil[j] * 1e-16)
        axis = np.logspace(math.log10(lo), math.log10(p_ceil[j]), grid_points_per_dim)
        axis[0] = p_floor[j]  # include the exact rate-floor corner
        axes.append(axis)
    mesh = np.meshgrid(*axes, indexing="ij")
    candidates = np.column_stack([m.ravel() for m in mesh])  # (n_pts, n_iu)

    load = candidates @ precoder.squared.T                     # (n_pts, n_ap)
    bias = params.bias_max - np.sqrt(load) / params.led_power
    mid = 0.5 * (params.bias_max + params.bias_min)
    feasible = np.all(bias >= mid - 1e-12 * params.bias_max, axis=1)
    feasible &= np.all(candidates >= p_floor * (1.0 - 1e-12), axis=1)

    h_ehu = channel.ehu_gains
    if h_ehu.shape[0]:
        energies = _energies_w(bias, h_ehu, params)
        feasible &= np.all(energies >= qos.energy_thresholds * (1.0 - 1e-9), axis=1)
        total_e = energies.sum(axis=1)
    else:
        total_e = np.zeros(candidates.shape[0])

    if not feasible.any():
        raise OracleInfeasibleError("no feasible grid point")

    rates = beta * np.log2(1.0 + snr_per_watt * candidates).sum(axis=1)
    objective = alpha * rates + (1.0 - alpha) / qos.omega * total_e
    objective = np.where(feasible, objective, -np.inf)
    best = int(np.argmax(objective))
    alloc = Allocation(bias=bias[best], powers=candidates[best])
    return alloc, float(objective[best])


def audit_allocation(alloc: Allocation, channel, precoder: PrecoderSet,
                     qos: QosSpec, params: PhysParams, coupling: str = "exact",
                     rtol: float = 1e-6) -> list:
    """Independent feasibility audit; returns a list of violation strings.

    ``coupling='exact'`` demands the per-AP load equal the squared bias
    headroom (solvers that construct the bias from the powers); the
    equal-bias benchmark reports the blended bias and only guarantees the
    load fits under the headroom, audited with ``coupling='within'``.
    """
    problems = []
    bias = np.asarray(alloc.bias, dtype=float)
    powers = np.asarray(alloc.powers, dtype=float)

    mid = 0.5 * (params.bias_max + params.bias_min)
    if np.any(bias < mid * (1.0 - rtol)) or np.any(bias > params.bias_max * (1.0 + rtol)):
        problems.append("bias outside the admissible box")

    if powers.size:
        rates = _rates_bps(powers, params)
        short = rates < qos.rate_thresholds * (1.0 - rtol)
        if np.any(short):
            problems.append(f"rate floor violated for users {np.nonzero(short)[0].tolist()}")

    h_ehu = channel.ehu_gains
    if h_ehu.shape[0]:
        energies = _energies_w(bias[None, :], h_ehu, params)[0]
        short = energies < qos.energy_thresholds * (1.0 - rtol)
        if np.any(short):
            problems.append(f"energy floor violated for users {np.nonzero(short)[0].tolist()}")

    load = precoder.squared @ powers if powers.size else np.zeros(bias.size)
    headroom = (params.led_power * (params.bias_max - bias)) ** 2
    scale = np.maximum(headroom, params.led_power ** 2 * (rtol * params.bias_max) ** 2)
    if coupling == "exact":
        if np.any(np.abs(load - headroom) > rtol * scale):
            problems.append("bias/power coupling identity violated")
    else:
        if np.any(load > headroom + rtol * scale):
            problems.append("per-AP load exceeds the bias headroom")
    return problems
