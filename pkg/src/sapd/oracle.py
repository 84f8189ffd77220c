"""Discretized exhaustive optimizer used to validate the analytic solver.

The band is cut into ``k`` equal channels and each user's budget into ``L``
units of ``P_i / L``.  An allocation gives every channel an integer number of
units per user, with at most ``L`` units in total per user (so sub-budget
allocations are part of the search space).  There are ``C(L + k, k)`` such
compositions per user and ``C(L + k, k) ** 2`` allocation pairs.

Two exact search methods are provided:

``dp``
    Dynamic programming over channels with the remaining unit budgets as
    state.  The weighted sum is channel-separable, so a scalar table suffices
    (``k (L + 1) ** 4`` updates).  For the weighted product each state keeps
    the Pareto frontier of ``(C1, C2)`` pairs.
``enumerate``
    Literal enumeration of all composition pairs, with branch-and-bound on
    user 1's composition: an interference-free capacity bound on the
    remaining value lets whole rows be skipped.  Only sensible for small
    grids; used to cross-check ``dp``.

Ties are broken towards the lexicographically smallest allocation, comparing
channel by channel the pair ``(units of user 1, units of user 2)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .exceptions import BudgetExceededError, GainTableMismatchError
from .model import Objective, PiecewisePsd, Scenario, log_factor, objective_value

__all__ = [
    "ChannelizedInstance",
    "Allocation",
    "MaxPowerReport",
    "StructureReport",
    "discretize",
    "brute_force",
    "search_space_size",
    "estimated_work",
    "interference_free_bound",
    "verify_max_power",
    "verify_rectangular_structure",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 10**8
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ChannelizedInstance:
    """A scenario cut into ``channels`` equal channels and ``levels`` power units per user."""

    scenario: Scenario
    channels: int
    levels: int
    gains: np.ndarray  # (k, 2, 2)

    @property
    def width(self) -> float:
        return self.scenario.bandwidth / self.channels

    @property
    def unit(self) -> np.ndarray:
        """Power of one unit for each user."""
        return np.asarray(self.scenario.power) / self.levels

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, self.scenario.bandwidth, self.channels + 1)

    def capacity_tables(self, base: float = 2.0) -> Tuple[np.ndarray, np.ndarray]:
        """Per-channel capacities ``C_i[c, a, b]`` for ``a`` and ``b`` units in channel ``c``."""
        L = self.levels
        w = self.width
        u1, u2 = self.unit
        n1, n2 = self.scenario.noise
        a = np.arange(L + 1)[:, None]
        b = np.arange(L + 1)[None, :]
        d1 = a * u1 / w
        d2 = b * u2 / w
        g = self.gains
        f = log_factor(base)
        C1 = w * np.log1p(d1[None] * g[:, 0, 0, None, None]
                          / (d2[None] * g[:, 1, 0, None, None] + n1)) * f
        C2 = w * np.log1p(d2[None] * g[:, 1, 1, None, None]
                          / (d1[None] * g[:, 0, 1, None, None] + n2)) * f
        return C1, C2


def discretize(scenario: Scenario, k: int, levels: int = 8) -> ChannelizedInstance:
    """Cut ``scenario`` into ``k`` channels with ``levels`` power units per user.

    Frequency-selective gain-table boundaries must fall on channel edges.
    """
    if k < 1 or levels < 1:
        raise ValueError(f"need k >= 1 and levels >= 1, got k={k}, levels={levels}")
    edges = np.linspace(0.0, scenario.bandwidth, k + 1)
    try:
        gains = scenario.band_gains(edges)
    except GainTableMismatchError as exc:
        raise GainTableMismatchError(
            f"gain table does not align with {k} channels: {exc.message}", field="gain_bands") from None
    return ChannelizedInstance(scenario, int(k), int(levels), gains)


@dataclass(frozen=True)
class Allocation:
    """Integer unit counts per channel, shape ``(k, 2)``, and their evaluation."""

    units: np.ndarray
    capacities: np.ndarray
    value: float
    instance: ChannelizedInstance
    objective: Objective
    method: str = "dp"

    @property
    def powers(self) -> np.ndarray:
        return self.units * self.instance.unit[None, :]

    @property
    def densities(self) -> np.ndarray:
        return self.powers / self.instance.width

    @property
    def used_units(self) -> np.ndarray:
        return self.units.sum(axis=0)

    def psd(self) -> PiecewisePsd:
        return PiecewisePsd(self.instance.edges, self.densities)


def search_space_size(k: int, levels: int) -> int:
    """Number of allocation pairs on the grid, ``C(L + k, k) ** 2``."""
    return math.comb(levels + k, k) ** 2


def estimated_work(k: int, levels: int, method: str = "dp") -> int:
    """Rough count of elementary evaluations the chosen method performs."""
    if method == "enumerate":
        return search_space_size(k, levels) * k
    return k * (levels + 1) ** 4


def _compositions(k: int, total: int) -> np.ndarray:
    """All vectors of ``k`` nonnegative ints with sum <= total, lexicographically sorted."""
    out = []
    for combo in itertools.combinations(range(total + k), k):
        # stars and bars with a slack bin: k cut points among total + k slots
        prev = -1
        parts = []
        for c in combo:
            parts.append(c - prev - 1)
            prev = c
        out.append(parts)
    arr = np.array(out, dtype=np.int64).reshape(-1, k)
    order = np.lexsort(arr.T[::-1])
    return arr[order]


def _evaluate(units: np.ndarray, C1: np.ndarray, C2: np.ndarray) -> np.ndarray:
    ch = np.arange(units.shape[0])
    return np.array([C1[ch, units[:, 0], units[:, 1]].sum(), C2[ch, units[:, 0], units[:, 1]].sum()])


def interference_free_bound(instance: ChannelizedInstance, user: int, channels: np.ndarray,
                            budget_units: int, base: float = 2.0) -> float:
    """Upper bound on ``user``'s capacity from ``budget_units`` spread over ``channels``.

    Drops all interference and replaces every gain by the best direct gain
    among those channels; by concavity uniform spreading is then optimal,
    so the bound is admissible for any grid allocation.
    """
    channels = np.asarray(channels)
    m = channels.size
    if m == 0 or budget_units <= 0:
        return 0.0
    g = np.max(instance.gains[channels, user, user])
    power = budget_units * instance.unit[user]
    width = m * instance.width
    noise = instance.scenario.noise[user]
    return width * math.log1p(power * g / (width * noise)) * log_factor(base)


def _dp_sum(C1, C2, weights, k, L):
    f = weights[0] * C1 + weights[1] * C2  # (k, L+1, L+1)
    V = np.zeros((k + 1, L + 1, L + 1))
    for c in range(k - 1, -1, -1):
        best = np.full((L + 1, L + 1), -np.inf)
        nxt = V[c + 1]
        for a in range(L + 1):
            for b in range(L + 1):
                # state (A, B) with A >= a, B >= b can place (a, b) here
                cand = f[c, a, b] + nxt[: L + 1 - a, : L + 1 - b]
                view = best[a:, b:]
                np.maximum(view, cand, out=view)
        V[c] = best
    units = np.zeros((k, 2), dtype=np.int64)
    A = B = L
    for c in range(k):
        target = V[c, A, B]
        tol = _TIE_RTOL * max(abs(V[0, L, L]), 1e-300)
        done = False
        for a in range(A + 1):
            for b in range(B + 1):
                if f[c, a, b] + V[c + 1, A - a, B - b] >= target - tol:
                    units[c] = (a, b)
                    A -= a
                    B -= b
                    done = True
                    break
            if done:
                break
    return units


def _pareto(points: np.ndarray) -> np.ndarray:
    """Non-dominated rows of an ``(n, 2)`` array (maximisation), sorted by C1 descending."""
    if points.shape[0] <= 1:
        return points
    order = np.lexsort((-points[:, 1], -points[:, 0]))
    pts = points[order]
    best_c2 = np.maximum.accumulate(pts[:, 1])
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = pts[1:, 1] > best_c2[:-1]
    return pts[keep]


def _dp_product(C1, C2, weights, k, L, objective):
    frontier = [[None] * (L + 1) for _ in range(L + 1)]
    zero = np.zeros((1, 2))
    nxt = [[zero] * (L + 1) for _ in range(L + 1)]
    fronts = [None] * (k + 1)
    fronts[k] = nxt
    for c in range(k - 1, -1, -1):
        cur = [[None] * (L + 1) for _ in range(L + 1)]
        for A in range(L + 1):
            for B in range(L + 1):
                parts = []
                for a in range(A + 1):
                    for b in range(B + 1):
                        parts.append(nxt[A - a][B - b] + np.array([C1[c, a, b], C2[c, a, b]]))
                cur[A][B] = _pareto(np.concatenate(parts))
        fronts[c] = cur
        nxt = cur
    del frontier
    root = fronts[0][L][L]
    vals = np.array([objective_value(p, weights, objective) for p in root])
    top = vals.max()
    # among optimal frontier points pick the allocation reachable lexicographically first
    tol = _TIE_RTOL * max(abs(top), 1e-300)
    targets = root[vals >= top - tol]
    best_units = None
    for target in targets:
        units = _reconstruct(fronts, C1, C2, k, L, target)
        if units is None:
            continue
        key = tuple(units.ravel())
        if best_units is None or key < tuple(best_units.ravel()):
            best_units = units
    return best_units


def _reconstruct(fronts, C1, C2, k, L, target):
    units = np.zeros((k, 2), dtype=np.int64)
    A = B = L
    need = np.array(target, dtype=float)
    scale = max(abs(need).max(), 1e-300)
    tol = 1e-11 * scale
    for c in range(k):
        placed = False
        for a in range(A + 1):
            for b in range(B + 1):
                rest = need - np.array([C1[c, a, b], C2[c, a, b]])
                front = fronts[c + 1][A - a][B - b]
                if np.any(np.all(front >= rest - tol, axis=1)):
                    units[c] = (a, b)
                    A -= a
                    B -= b
                    need = rest
                    placed = True
                    break
            if placed:
                break
        if not placed:
            return None
    return units


def _enumerate(C1, C2, instance, weights, objective, base):
    k, L = instance.channels, instance.levels
    comps = _compositions(k, L)  # (M, k)
    ch = np.arange(k)[None, :]
    # interference-free per-composition capacities for the bound
    free1 = C1[ch, comps, 0].sum(axis=1)
    free2 = C2[ch, 0, comps].sum(axis=1)
    best_val = -np.inf
    best_key = None
    best_units = None
    if objective.kind == "sum":
        bound = weights[0] * free1 + weights[1] * free2.max()
    else:
        bound = np.array([objective_value((f1, free2.max()), weights, objective)
                          for f1 in free1])
    order = np.argsort(-bound, kind="stable")
    for i in order:
        if bound[i] < best_val - _TIE_RTOL * abs(best_val):
            break
        a = comps[i]
        caps1 = C1[ch, a[None, :], comps].sum(axis=1)
        caps2 = C2[ch, a[None, :], comps].sum(axis=1)
        if objective.kind == "sum":
            vals = weights[0] * caps1 + weights[1] * caps2
        else:
            with np.errstate(divide="ignore"):
                logs = weights[0] * np.log(caps1) + weights[1] * np.log(caps2)
            vals = np.where((caps1 > 0) & (caps2 > 0), np.exp(logs), 0.0)
        top = vals.max()
        tol = _TIE_RTOL * max(abs(top), abs(best_val) if np.isfinite(best_val) else 0.0, 1e-300)
        for j in np.nonzero(vals >= top - tol)[0]:
            units = np.stack([a, comps[j]], axis=1)
            key = tuple(units.ravel())
            v = vals[j]
            if v > best_val + tol or (abs(v - best_val) <= tol and key < best_key):
                best_val, best_key, best_units = max(v, best_val), key, units
    return best_units


def brute_force(instance: ChannelizedInstance, objective: Optional[Objective] = None,
                budget: int = DEFAULT_BUDGET, method: str = "dp") -> Allocation:
    """Exact optimum of the objective over the discrete allocation grid.

    Parameters
    ----------
    instance : ChannelizedInstance
    objective : Objective, optional
        Weighted sum (default) or weighted product of capacities.
    budget : int
        Refuse instances whose :func:`estimated_work` exceeds this.
    method : {"dp", "enumerate"}

    Raises
    ------
    BudgetExceededError
        With the work estimate and the grid size ``C(L + k, k) ** 2``.
    """
    objective = objective or Objective()
    if method not in ("dp", "enumerate"):
        raise ValueError(f"unknown method {method!r}")
    k, L = instance.channels, instance.levels
    work = estimated_work(k, L, method)
    if objective.kind == "product" and method == "dp":
        work *= k * (L + 1)  # frontier sizes grow with the number of channels
    if work > budget:
        raise BudgetExceededError(work, search_space_size(k, L), budget)
    C1, C2 = instance.capacity_tables(objective.base)
    weights = np.asarray(instance.scenario.weights)
    if method == "enumerate":
        units = _enumerate(C1, C2, instance, weights, objective, objective.base)
    elif objective.kind == "sum":
        units = _dp_sum(C1, C2, weights, k, L)
    else:
        units = _dp_product(C1, C2, weights, k, L, objective)
    caps = _evaluate(units, C1, C2)
    return Allocation(units=units, capacities=caps,
                      value=objective_value(caps, weights, objective),
                      instance=instance, objective=objective, method=method)


@dataclass(frozen=True)
class MaxPowerReport:
    """Fraction of each budget used by an allocation and whether it is suspiciously low."""

    ratios: np.ndarray
    threshold: float
    flagged: Tuple[bool, bool]

    @property
    def ok(self) -> bool:
        return not any(self.flagged)


def verify_max_power(allocation: Allocation, instance: Optional[ChannelizedInstance] = None
                     ) -> MaxPowerReport:
    """Flag any user that leaves more than one power unit unused."""
    instance = instance or allocation.instance
    ratios = allocation.used_units / instance.levels
    threshold = 1.0 - 1.0 / instance.levels
    flagged = tuple(bool(r < threshold - 1e-12) for r in ratios)
    return MaxPowerReport(ratios=ratios, threshold=threshold, flagged=flagged)


@dataclass(frozen=True)
class StructureReport:
    """Spread of each user's density over the channels both users occupy."""

    shared_channels: List[int]
    spread_units: Tuple[int, int]
    relative_spread: Tuple[float, float]
    max_steps: int

    @property
    def passed(self) -> bool:
        return max(self.spread_units) <= self.max_steps


def verify_rectangular_structure(allocation: Allocation,
                                 instance: Optional[ChannelizedInstance] = None,
                                 tol: float = 0.0, max_steps: int = 2) -> StructureReport:
    """Check that densities are (nearly) constant where the users overlap.

    A channel counts as shared when both users' powers exceed ``tol``.
    Channels occupied by a single user are ignored.  The check passes when
    each user's unit count varies by at most ``max_steps`` across the shared
    channels.
    """
    instance = instance or allocation.instance
    powers = allocation.powers
    shared = np.nonzero((powers[:, 0] > tol) & (powers[:, 1] > tol))[0]
    if shared.size == 0:
        return StructureReport([], (0, 0), (0.0, 0.0), max_steps)
    u = allocation.units[shared]
    spread = tuple(int(u[:, i].max() - u[:, i].min()) for i in range(2))
    rel = tuple(float((u[:, i].max() - u[:, i].min()) / u[:, i].max()) for i in range(2))
    return StructureReport([int(c) for c in shared], spread, rel, max_steps)
