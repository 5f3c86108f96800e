"""Rate and harvested-energy utilities and the power/bias coupling.

The per-AP electrical message power equals the squared modulation
amplitude times the squared LED power factor, which ties the message
power vector to the DC-bias vector: ``squared_precoder @ powers ==
led_power**2 * (bias_max - bias)**2`` componentwise.  A power vector
determines the bias vector uniquely; the reverse is one-to-many.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import PhysParams, QosSpec
from .precoding import PrecoderSet


class BiasRangeError(ValueError):
    """Induced DC bias leaves the admissible half of the linear region."""


@dataclass(frozen=True, eq=False)
class Allocation:
    """Joint decision variable: per-AP DC bias (A) and per-IU message power (W)."""

    bias: np.ndarray
    powers: np.ndarray


def sum_rate(powers: np.ndarray, params: PhysParams) -> float:
    """Achievable-sum-rate lower bound in bits/s, base-2 logs.

    The SNR coefficient includes the squared LED power factor; see
    ``PhysParams.snr_coeff``.
    """
    powers = np.atleast_1d(np.asarray(powers, dtype=float))
    if np.any(powers < 0):
        raise ValueError("message powers must be nonnegative")
    return float(params.rate_prefactor * np.sum(np.log2(1.0 + params.snr_coeff * powers)))


def min_power(rate_threshold: float, params: PhysParams) -> float:
    """Smallest per-user message power meeting a rate threshold (bits/s)."""
    if rate_threshold < 0:
        raise ValueError("rate threshold must be nonnegative")
    return (2.0 ** (rate_threshold / params.rate_prefactor) - 1.0) / params.snr_coeff


def min_powers(qos: QosSpec, params: PhysParams) -> np.ndarray:
    return np.array([min_power(r, params) for r in qos.rate_thresholds])


def bias_from_powers(powers: np.ndarray, precoder: PrecoderSet,
                     params: PhysParams, check: bool = True) -> np.ndarray:
    """Unique DC-bias vector induced by a message-power vector.

    With ``check`` enabled, a bias falling below the midpoint of the
    linear region raises ``BiasRangeError`` (the allocation would exceed
    the per-AP power cap); nothing is ever clamped silently.
    """
    powers = np.asarray(powers, dtype=float)
    load = precoder.squared @ powers
    if np.any(load < 0):
        raise ValueError("per-AP power load must be nonnegative")
    bias = params.bias_max - np.sqrt(load) / params.led_power
    if check and np.any(bias < params.bias_mid - 1e-12 * params.bias_max):
        raise BiasRangeError("bias out of linear range: per-AP power cap exceeded")
    return bias


def harvested_energy(bias: np.ndarray, h_k: np.ndarray, params: PhysParams) -> float:
    """Harvested power (W) of one user from the DC component.

    Fill factor times DC photocurrent times open-circuit voltage, the
    latter logarithmic in the photocurrent over the dark current.
    """
    bias = np.asarray(bias, dtype=float)
    h_k = np.asarray(h_k, dtype=float)
    i_dc = params.conv_factor * params.led_power * float(h_k @ bias)
    return params.fill_factor * i_dc * params.thermal_voltage * math.log1p(
        i_dc / params.dark_current)


def harvested_energies(bias: np.ndarray, h_ehu: np.ndarray,
                       params: PhysParams) -> np.ndarray:
    """Vector of per-EHU harvested powers (W), one entry per channel row."""
    h_ehu = np.asarray(h_ehu, dtype=float)
    if h_ehu.shape[0] == 0:
        return np.zeros(0)
    i_dc = params.conv_factor * params.led_power * (h_ehu @ np.asarray(bias, dtype=float))
    return (params.fill_factor * params.thermal_voltage * i_dc
            * np.log1p(i_dc / params.dark_current))


def total_energy(bias: np.ndarray, h_ehu: np.ndarray, params: PhysParams) -> float:
    """Sum of harvested powers over all EHU rows (W)."""
    return float(np.sum(harvested_energies(bias, h_ehu, params)))


def weighted_objective(alloc: Allocation, qos: QosSpec, channel,
                       precoder: PrecoderSet, params: PhysParams) -> float:
    """alpha-weighted sum of the rate utility and the scaled energy utility."""
    rate = sum_rate(alloc.powers, params) if alloc.powers.size else 0.0
    energy = total_energy(alloc.bias, channel.ehu_gains, params)
    return qos.alpha * rate + (1.0 - qos.alpha) / qos.omega * energy
