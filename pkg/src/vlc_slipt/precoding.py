"""Zero-forcing precoding over the information-user sub-channel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

CONDITION_LIMIT = 1e12


class DegenerateChannelError(RuntimeError):
    """Information-user channel is rank deficient or too ill conditioned."""


class LinearizationSingularError(ValueError):
    """Bias expansion point reaches the top of the linear region."""


@dataclass(frozen=True, eq=False)
class PrecoderSet:
    """Zero-forcing precoder and its squared-entry companion.

    ``matrix`` right-inverts the IU channel; ``squared`` holds elementwise
    squares, whose row i gives the per-AP electrical power load as a linear
    function of the message powers.
    """

    matrix: np.ndarray   # (n_ap, n_iu)
    squared: np.ndarray  # (n_ap, n_iu), elementwise matrix**2

    @property
    def n_ap(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_iu(self) -> int:
        return self.matrix.shape[1]


def zf_precoder(h_iu: np.ndarray) -> PrecoderSet:
    """Right pseudo-inverse of a wide IU channel matrix.

    Solves the small symmetric positive-definite Gram system rather than
    taking an SVD; the user count is tiny here.  Channels with condition
    number above ``CONDITION_LIMIT`` are rejected so the caller can redraw
    user positions.
    """
    h_iu = np.asarray(h_iu, dtype=float)
    n_iu, n_ap = h_iu.shape
    if n_iu == 0:
        return PrecoderSet(np.zeros((n_ap, 0)), np.zeros((n_ap, 0)))
    if n_iu >= n_ap:
        raise DegenerateChannelError("need strictly fewer IUs than APs")
    if not np.all(np.isfinite(h_iu)):
        raise DegenerateChannelError("non-finite channel entries")
    if np.linalg.cond(h_iu) > CONDITION_LIMIT:
        raise DegenerateChannelError("IU channel too ill conditioned")
    gram = h_iu @ h_iu.T
    try:
        factor = cho_factor(gram)
    except LinAlgError as exc:
        raise DegenerateChannelError("IU Gram matrix not positive definite") from exc
    g = cho_solve(factor, h_iu).T
    return PrecoderSet(matrix=g, squared=g ** 2)


def linearized_map(precoder: PrecoderSet, b_hat: np.ndarray, params) -> np.ndarray:
    """Linear bias-from-powers map around the expansion point ``b_hat``.

    Row i maps message powers to the bias deficit at AP i:
    ``bias = bias_max - map @ powers`` holds exactly at any power vector
    whose induced bias equals ``b_hat``, and to first order nearby.  Each
    row is the squared-precoder row divided by
    ``led_power**2 * (bias_max - b_hat_i)``.
    """
    b_hat = np.asarray(b_hat, dtype=float)
    headroom = params.bias_max - b_hat
    if np.any(headroom <= 0.0):
        raise LinearizationSingularError(
            "expansion bias at or above the top of the linear region")
    return precoder.squared / (params.led_power ** 2 * headroom)[:, None]
