"""Closed-form optima: disjoint split, full sharing, two-level power split, sigma2 bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .exceptions import UnsupportedInstanceError
from .model import Objective, PiecewisePsd, Scenario, log_factor, objective_value

__all__ = [
    "FdmaSolution",
    "FullShareSolution",
    "PowerSplit",
    "fdma_optimum",
    "fdma_capacity",
    "full_share_capacity",
    "two_band_power_split",
    "sigma2_upper_bound",
    "sigma1_upper_bound",
    "single_user_capacity",
]


def _require_flat(scenario: Scenario):
    if not scenario.is_flat:
        raise UnsupportedInstanceError(
            "closed forms need flat gains; use the discretized oracle for "
            "frequency-selective instances")


@dataclass(frozen=True)
class FdmaSolution:
    """Best disjoint allocation: user 1 on ``[0, yW)``, user 2 on ``[yW, W]``."""

    split: float
    densities: Tuple[float, float]
    capacities: np.ndarray
    value: float
    psd: PiecewisePsd
    closed_form: bool

    @property
    def capacity(self) -> float:
        return float(np.sum(self.capacities))


@dataclass(frozen=True)
class FullShareSolution:
    """Both users spread their full power uniformly over the whole band."""

    capacities: np.ndarray
    value: float
    psd: PiecewisePsd

    @property
    def capacity(self) -> float:
        return float(np.sum(self.capacities))


@dataclass(frozen=True)
class PowerSplit:
    """Optimal split of one user's power over two bands with different interference.

    ``fraction`` is the share of the power placed in the low band ``[0, w]``.
    ``clamped`` is set when the unconstrained stationary point fell outside
    ``[0, 1]`` and the boundary solution was returned instead.
    """

    fraction: float
    density_low: float
    density_high: float
    clamped: bool


def _fdma_split_capacities(y, scenario: Scenario, base: float) -> np.ndarray:
    W, P1, P2, N1, N2, h11, _, _, h22 = scenario.params
    scale = log_factor(base)
    c1 = y * W * math.log1p(P1 * h11 / (y * W * N1)) if y > 0 else 0.0
    c2 = (1 - y) * W * math.log1p(P2 * h22 / ((1 - y) * W * N2)) if y < 1 else 0.0
    return np.array([c1, c2]) * scale


def fdma_capacity(scenario: Scenario, base: float = 2.0) -> float:
    """``W log(1 + P1 h11 / (W N1) + P2 h22 / (W N2))``."""
    _require_flat(scenario)
    W, P1, P2, N1, N2, h11, _, _, h22 = scenario.params
    return W * math.log1p(P1 * h11 / (W * N1) + P2 * h22 / (W * N2)) * log_factor(base)


def _fdma_psd(y, scenario: Scenario) -> Tuple[PiecewisePsd, Tuple[float, float]]:
    W, P1, P2 = scenario.params[:3]
    d1 = P1 / (y * W) if y > 0 else 0.0
    d2 = P2 / ((1 - y) * W) if y < 1 else 0.0
    psd = PiecewisePsd.from_bands([y * W, (1 - y) * W], [[d1, 0.0], [0.0, d2]])
    return psd, (d1, d2)


def _numeric_split(scenario: Scenario, objective: Objective) -> float:
    # every candidate objective is concave in y; its derivative is strictly decreasing
    W, P1, P2, N1, N2, h11, _, _, h22 = scenario.params
    a = P1 * h11 / (W * N1)
    b = P2 * h22 / (W * N2)
    w1, w2 = scenario.weights

    def per_unit(t, snr):
        # d/dt [t log(1 + snr / t)]
        return math.log1p(snr / t) - snr / (t + snr)

    if objective.kind == "sum":
        def slope(y):
            return w1 * per_unit(y, a) - w2 * per_unit(1 - y, b)
    else:
        def slope(y):
            c1 = y * math.log1p(a / y)
            c2 = (1 - y) * math.log1p(b / (1 - y))
            return w1 * per_unit(y, a) / c1 - w2 * per_unit(1 - y, b) / c2

    lo, hi = 1e-300, 1.0 - 1e-16
    if slope(hi) >= 0:
        return 1.0
    if slope(lo) <= 0:
        return 0.0
    return brentq(slope, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def fdma_optimum(scenario: Scenario, objective: Optional[Objective] = None) -> FdmaSolution:
    """Best split of the band into two disjoint sub-bands, each user at full power.

    With equal weights under the sum objective the split fraction is
    ``y = N2 P1 h11 / (N1 P2 h22 + N2 P1 h11)``.  Otherwise the concave
    one-dimensional objective in ``y`` is maximised numerically.
    """
    _require_flat(scenario)
    objective = objective or Objective()
    W, P1, P2, N1, N2, h11, _, _, h22 = scenario.params
    closed = objective.kind == "sum" and scenario.weights[0] == scenario.weights[1]
    if closed:
        y = N2 * P1 * h11 / (N1 * P2 * h22 + N2 * P1 * h11)
    else:
        y = _numeric_split(scenario, objective)
    psd, dens = _fdma_psd(y, scenario)
    caps = _fdma_split_capacities(y, scenario, objective.base)
    value = objective_value(caps, scenario.weights, objective)
    return FdmaSolution(split=float(y), densities=dens, capacities=caps, value=value, psd=psd,
                        closed_form=closed)


def single_user_capacity(scenario: Scenario, user: int, base: float = 2.0) -> float:
    """Capacity of ``user`` alone on the whole band at full power."""
    W = scenario.bandwidth
    snr = scenario.power[user] * scenario.gain[user][user] / (W * scenario.noise[user])
    return W * math.log1p(snr) * log_factor(base)


def full_share_capacity(scenario: Scenario, objective: Optional[Objective] = None
                        ) -> FullShareSolution:
    """Both users at constant density ``P_i / W`` on all of ``[0, W]``.

    The total is ``W log(1 + P1 h11/(P2 h21 + W N1)) + W log(1 + P2 h22/(P1 h12 + W N2))``;
    weights are applied term by term.
    """
    _require_flat(scenario)
    objective = objective or Objective()
    W, P1, P2, N1, N2, h11, h12, h21, h22 = scenario.params
    scale = log_factor(objective.base)
    caps = np.array([
        W * math.log1p(P1 * h11 / (P2 * h21 + W * N1)),
        W * math.log1p(P2 * h22 / (P1 * h12 + W * N2)),
    ]) * scale
    psd = PiecewisePsd.uniform(W, P1 / W, P2 / W)
    return FullShareSolution(capacities=caps, value=objective_value(caps, scenario.weights,
                                                                    objective), psd=psd)


def two_band_power_split(P: float, h: float, N: float, I_low: float, I_high: float,
                         w: float, W: float) -> PowerSplit:
    """Water-fill one user's power ``P`` across ``[0, w]`` and ``(w, W]``.

    The interference levels ``I_low`` and ``I_high`` are constant on the two
    bands.  The stationary split is::

        k = w/W + w (W - w) (I_high - I_low) / (W P h)

    with densities ``(P + (W - w)(I_high - I_low)/h) / W`` and
    ``(P + w (I_low - I_high)/h) / W``.  ``N`` does not enter the result
    because the noise floor is common to both bands.
    """
    if not 0 < w < W:
        raise ValueError(f"need 0 < w < W, got w={w!r}, W={W!r}")
    if I_low < 0 or I_high < 0:
        raise ValueError("interference levels must be nonnegative")
    gap = (I_high - I_low) / h
    k = w / W + w * (W - w) * gap / (W * P)
    if k < 0:
        return PowerSplit(0.0, 0.0, P / (W - w), True)
    if k > 1:
        return PowerSplit(1.0, P / w, 0.0, True)
    low = (P + (W - w) * gap) / W
    high = (P - w * gap) / W
    return PowerSplit(float(k), float(low), float(high), False)


def sigma2_upper_bound(scenario: Scenario) -> float:
    """Upper bound ``gamma (P1 + P2) / W`` on user 2's shared-band density.

    ``gamma = max(1, N2 h11 / (N1 h22))``.
    """
    _require_flat(scenario)
    W, P1, P2, N1, N2, h11, _, _, h22 = scenario.params
    gamma = max(1.0, N2 * h11 / (N1 * h22))
    return gamma * (P1 + P2) / W


def sigma1_upper_bound(scenario: Scenario) -> float:
    """Mirror of :func:`sigma2_upper_bound` for user 1's shared density."""
    return sigma2_upper_bound(scenario.swapped())

