"""Partially overlapping allocations and the best-of-three solver.

A partial-overlap allocation splits ``[0, W]`` into three contiguous bands,
laid out ``S1 | S12 | S2``:

* ``S1``  -- user 1 alone at density ``sigma1 + c1``,
* ``S12`` -- both users, at ``sigma1`` and ``sigma2``,
* ``S2``  -- user 2 alone at density ``sigma2 + c2``.

Seven unknowns are tied by six optimality conditions: the band widths sum to
``W``, both power budgets are exhausted, the two exclusive bands are split
as in the disjoint optimum, and each user's power balance between its
exclusive band and the shared band is stationary (``gamma1 = gamma2 = 0``).
What remains is a one-parameter curve in ``sigma2``.  For every ``sigma2``
on a dense grid we recover all ``sigma1`` roots of the width condition,
rebuild the other variables, follow each root branch, and keep the feasible
local maxima of the total capacity ``B``.  The subcases with an empty
exclusive band (``S1 = 0`` or ``S2 = 0``) drop one condition and one
unknown and go through the same machinery.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import _gamma
from .closed_form import (
    fdma_optimum,
    full_share_capacity,
    sigma1_upper_bound,
    sigma2_upper_bound,
)
from .exceptions import SingularPointError, UnsupportedInstanceError
from .model import Objective, PiecewisePsd, Scenario, log_factor, objective_value

__all__ = [
    "WIDTH_RULES",
    "SolverOptions",
    "CIncrements",
    "Widths",
    "PartialOverlapSolution",
    "Candidate",
    "SolveReport",
    "gamma1",
    "gamma2",
    "solve_c_from_gammas",
    "widths_from_powers",
    "ratio_residual",
    "sigma1_candidates",
    "objective_B",
    "equation_residuals",
    "solve_partial_overlap",
    "SweepRow",
    "sweep_curve",
    "solve",
]

logger = logging.getLogger(__name__)

#: How the two exclusive bands are related.  ``exclusive_density`` equalises
#: the disjoint-split water level on the exclusive bands,
#: ``(c2 + sigma2) N1 h22 = (c1 + sigma1) N2 h11``; ``total_power`` imposes
#: ``S1 / S2 = N2 P1 h11 / (N1 P2 h22)`` with the total budgets.
WIDTH_RULES = ("exclusive_density", "total_power")

FORM_ORDER = {"fdma": 0, "full_share": 1, "partial": 2}
SUBCASE_ORDER = {"interior": 0, "s1_zero": 1, "s2_zero": 2}

_SINGULAR_RTOL = 1e-13


@dataclass(frozen=True)
class SolverOptions:
    """Numerical settings for the partial-overlap sweep.

    ``sigma2_samples`` and ``scan_samples`` are the grid sizes along the
    curve parameter and along the eliminated unknown.  ``refine_rtol`` is the
    relative bracket width at which root refinement stops, ``tol`` the
    acceptance threshold on scaled equation residuals.
    """

    sigma2_samples: int = 1024
    scan_samples: int = 1024
    refine_rtol: float = 1e-15
    tol: float = 1e-8
    width_rule: str = "exclusive_density"
    subcases: bool = True

    def __post_init__(self):
        if self.width_rule not in WIDTH_RULES:
            raise ValueError(f"width_rule must be one of {WIDTH_RULES}, got {self.width_rule!r}")
        if self.sigma2_samples < 8 or self.scan_samples < 8:
            raise ValueError("need at least 8 samples per axis")


# -- stationarity polynomials -------------------------------------------------

def _user_view(scenario: Scenario, user: int):
    """Gains and noises as seen by ``user`` moving its own power."""
    W, P1, P2, N1, N2, h11, h12, h21, h22 = scenario.params
    if user == 0:
        return dict(g=h11, x_in=h21, x_out=h12, h_o=h22, n=N1, n_o=N2)
    return dict(g=h22, x_in=h12, x_out=h21, h_o=h11, n=N2, n_o=N1)


def gamma1(sigma1, sigma2, c1, scenario: Scenario):
    """Stationarity residual of user 1's exclusive/shared power balance.

    Vanishes exactly when the derivative of the two-slice capacity with
    respect to the power fraction is zero; affine in ``c1``.
    """
    return _gamma.gamma_value(sigma1, sigma2, c1, **_user_view(scenario, 0))


def gamma2(sigma1, sigma2, c2, scenario: Scenario):
    """Mirror of :func:`gamma1` for user 2."""
    return _gamma.gamma_value(sigma2, sigma1, c2, **_user_view(scenario, 1))


def _gamma_scale(sigma_own, sigma_other, c, scenario, user):
    return _gamma.gamma_scale(sigma_own, sigma_other, c, **_user_view(scenario, user))


def _coefficients(sigma1, sigma2, scenario: Scenario):
    """``(A1, K1, A2, K2)`` with ``gamma_i = A_i + K_i c_i``; broadcasts over arrays."""
    v1 = _user_view(scenario, 0)
    v2 = _user_view(scenario, 1)
    return (_gamma.gamma_offset(sigma1, sigma2, **v1), _gamma.gamma_slope(sigma1, sigma2, **v1),
            _gamma.gamma_offset(sigma2, sigma1, **v2), _gamma.gamma_slope(sigma2, sigma1, **v2))


def _slope_scale(sigma_own, sigma_other, scenario, user):
    view = _user_view(scenario, user)
    offset = _gamma.gamma_offset(sigma_own, sigma_other, **view)
    return _gamma.gamma_scale(sigma_own, sigma_other, 1.0, **view) - offset


class CIncrements(NamedTuple):
    c1: float
    c2: float

    @property
    def feasible(self) -> bool:
        return self.c1 > 0 and self.c2 > 0


class Widths(NamedTuple):
    S1: float
    S2: float
    S12: float

    @property
    def feasible(self) -> bool:
        return self.S1 > 0 and self.S2 > 0 and self.S12 > 0


def _solve_c(sigma_own, sigma_other, scenario, user):
    view = _user_view(scenario, user)
    offset = _gamma.gamma_offset(sigma_own, sigma_other, **view)
    slope = _gamma.gamma_slope(sigma_own, sigma_other, **view)
    if abs(slope) <= _SINGULAR_RTOL * _slope_scale(sigma_own, sigma_other, scenario, user):
        raise SingularPointError(f"gamma{user + 1} does not depend on c{user + 1} here")
    return -offset / slope


def solve_c_from_gammas(sigma1: float, sigma2: float, scenario: Scenario) -> CIncrements:
    """Exclusive-band increments ``(c1, c2)`` making both stationarity residuals vanish.

    Negative values are returned as is; ``.feasible`` tells whether the pair
    can belong to a valid allocation.
    """
    return CIncrements(float(_solve_c(sigma1, sigma2, scenario, 0)),
                       float(_solve_c(sigma2, sigma1, scenario, 1)))


def widths_from_powers(sigma1: float, sigma2: float, c1: float, c2: float,
                       scenario: Scenario) -> Widths:
    """Band widths exhausting both budgets with ``S1 + S2 + S12 = W``.

    Solves ``c1 S1 - sigma1 S2 = P1 - W sigma1`` and
    ``c2 S2 - sigma2 S1 = P2 - W sigma2``::

        S1 = (P1 c2 - W sigma1 c2 + P2 sigma1 - W sigma1 sigma2) / (c1 c2 - sigma1 sigma2)
        S2 = (P2 c1 - W sigma2 c1 + P1 sigma2 - W sigma1 sigma2) / (c1 c2 - sigma1 sigma2)
    """
    W, P1, P2 = scenario.params[:3]
    det = c1 * c2 - sigma1 * sigma2
    if abs(det) <= _SINGULAR_RTOL * (abs(c1 * c2) + sigma1 * sigma2):
        raise SingularPointError("c1 c2 = sigma1 sigma2: widths are not determined")
    S1 = ((P1 - W * sigma1) * c2 + sigma1 * (P2 - W * sigma2)) / det
    S2 = ((P2 - W * sigma2) * c1 + sigma2 * (P1 - W * sigma1)) / det
    return Widths(float(S1), float(S2), float(W - S1 - S2))


def _width_terms(sigma1, sigma2, scenario, rule):
    """The two sides of the width condition after eliminating ``c1, c2`` (and widths)."""
    W, P1, P2, N1, N2, h11, h12, h21, h22 = scenario.params
    c1, c2 = solve_c_from_gammas(sigma1, sigma2, scenario)
    if rule == "exclusive_density":
        return (c2 + sigma2) * N1 * h22, (c1 + sigma1) * N2 * h11
    S1, S2, _ = widths_from_powers(sigma1, sigma2, c1, c2, scenario)
    return S1 * N1 * P2 * h22, S2 * N2 * P1 * h11


def ratio_residual(sigma1: float, sigma2: float, scenario: Scenario,
                   rule: str = "exclusive_density") -> float:
    """Residual of the condition linking the two exclusive bands.

    ``total_power`` evaluates ``S1 N1 P2 h22 - S2 N2 P1 h11``;
    ``exclusive_density`` evaluates ``(c2 + sigma2) N1 h22 - (c1 + sigma1) N2 h11``.
    ``c1, c2`` come from the stationarity conditions and the widths from the
    power budgets.  Raises :class:`SingularPointError` where an elimination
    step is undefined.
    """
    left, right = _width_terms(sigma1, sigma2, scenario, rule)
    return float(left - right)


def _scaled_ratio_residual(sigma1, sigma2, scenario, rule):
    left, right = _width_terms(sigma1, sigma2, scenario, rule)
    denom = abs(left) + abs(right)
    return float(abs(left - right) / denom) if denom > 0 else 0.0


def _cleared_residual(sigma1, sigma2, scenario: Scenario, rule: str):
    """Width condition multiplied through by ``K1 K2``; a polynomial in ``sigma1``.

    Same sign changes as :func:`ratio_residual` wherever the latter is defined,
    but free of poles, so it can be scanned on a grid.
    """
    W, P1, P2, N1, N2, h11, h12, h21, h22 = scenario.params
    A1, K1, A2, K2 = _coefficients(sigma1, sigma2, scenario)
    if rule == "exclusive_density":
        return (sigma2 * K2 - A2) * K1 * N1 * h22 - (sigma1 * K1 - A1) * K2 * N2 * h11
    num1 = (-(P1 - W * sigma1) * A2 + sigma1 * (P2 - W * sigma2) * K2) * K1
    num2 = (-(P2 - W * sigma2) * A1 + sigma2 * (P1 - W * sigma1) * K1) * K2
    return num1 * N1 * P2 * h22 - num2 * N2 * P1 * h11


def _mixed_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """Half geometric, half linear samples of ``[lo, hi]``; sorted and unique."""
    geo = np.geomspace(lo, hi, n // 2)
    lin = np.linspace(lo, hi, n - n // 2)
    return np.unique(np.concatenate([geo, lin]))


def _bisect_brackets(fun: Callable, lo: np.ndarray, hi: np.ndarray, rtol: float,
                     max_iter: int = 200) -> np.ndarray:
    """Vectorised bisection on many sign-change brackets at once."""
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    f_lo = fun(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = fun(mid)
        left = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, f_mid, f_lo)
        hi = np.where(left, hi, mid)
        if np.all(hi - lo <= rtol * np.maximum(np.abs(lo), np.abs(hi))):
            break
    # pick the end with the smaller residual
    f_hi = fun(hi)
    return np.where(np.abs(f_lo) <= np.abs(f_hi), lo, hi)


def _sign_change_roots(fun: Callable, grid: np.ndarray, rtol: float) -> np.ndarray:
    values = fun(grid)
    exact = grid[values == 0]
    s = np.sign(values)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if idx.size == 0:
        return np.sort(exact)
    roots = _bisect_brackets(fun, grid[idx], grid[idx + 1], rtol)
    return np.sort(np.concatenate([roots, exact]))


def sigma1_candidates(sigma2: float, scenario: Scenario, rule: str = "exclusive_density",
                      samples: int = 1024, rtol: float = 1e-12) -> List[float]:
    """All roots in ``sigma1`` of the width condition at fixed ``sigma2``.

    The cleared residual is scanned on ``samples`` points of
    ``(0, sigma1_max]`` and every sign change is refined by bisection.  Roots
    where ``c1``, ``c2`` or the widths are undefined are dropped.  Tangential
    (even-multiplicity) roots are not detected.
    """
    hi = sigma1_upper_bound(scenario)
    grid = _mixed_grid(hi * 1e-9, hi, samples)
    roots = _sign_change_roots(lambda s: _cleared_residual(s, sigma2, scenario, rule), grid, rtol)
    out = []
    for r in roots:
        try:
            _width_terms(float(r), sigma2, scenario, rule)
        except SingularPointError:
            continue
        out.append(float(r))
    return out


def objective_B(S1, S2, S12, sigma1, sigma2, c1, c2, scenario: Scenario,
                base: float = 2.0) -> float:
    """Total capacity of the three-band allocation (cross gains included)."""
    W, P1, P2, N1, N2, h11, h12, h21, h22 = scenario.params
    total = 0.0
    if S1 > 0:
        total += S1 * math.log1p((sigma1 + c1) * h11 / N1)
    if S2 > 0:
        total += S2 * math.log1p((sigma2 + c2) * h22 / N2)
    if S12 > 0:
        total += S12 * (math.log1p(sigma1 * h11 / (sigma2 * h21 + N1))
                        + math.log1p(sigma2 * h22 / (sigma1 * h12 + N2)))
    return total * log_factor(base)


def _capacities(S1, S2, S12, sigma1, sigma2, c1, c2, scenario, base):
    W, P1, P2, N1, N2, h11, h12, h21, h22 = scenario.params
    f = log_factor(base)
    C1 = (S1 * math.log1p((sigma1 + c1) * h11 / N1) if S1 > 0 else 0.0) \
        + (S12 * math.log1p(sigma1 * h11 / (sigma2 * h21 + N1)) if S12 > 0 else 0.0)
    C2 = (S2 * math.log1p((sigma2 + c2) * h22 / N2) if S2 > 0 else 0.0) \
        + (S12 * math.log1p(sigma2 * h22 / (sigma1 * h12 + N2)) if S12 > 0 else 0.0)
    return np.array([C1, C2]) * f


@dataclass(frozen=True)
class PartialOverlapSolution:
    """One stationary (or branch-end) point of the partial-overlap curve.

    ``subcase`` is ``interior`` (both exclusive bands non-empty), ``s1_zero``
    or ``s2_zero``.  For the degenerate subcases the absent increment is
    reported as 0 and the conditions that do not apply have residual ``None``.
    ``parameter`` is the value of the sweep variable (``sigma2`` except for
    ``s2_zero``, which sweeps ``sigma1``); ``stationarity`` is
    ``|parameter * dB/dparameter| / |B|`` by central differences.
    """

    S1: float
    S2: float
    S12: float
    sigma1: float
    sigma2: float
    c1: float
    c2: float
    B: float
    capacities: np.ndarray
    residuals: Dict[str, Optional[float]]
    subcase: str = "interior"
    branch: int = 0
    endpoint: bool = False
    parameter: float = 0.0
    stationarity: Optional[float] = None
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def variables(self) -> Dict[str, float]:
        return dict(S1=self.S1, S2=self.S2, S12=self.S12, sigma1=self.sigma1,
                    sigma2=self.sigma2, c1=self.c1, c2=self.c2)

    @property
    def max_residual(self) -> float:
        vals = [v for v in self.residuals.values() if v is not None]
        return max(vals) if vals else 0.0

    def psd(self) -> PiecewisePsd:
        """Three-band PSD laid out ``S1 | S12 | S2``."""
        return PiecewisePsd.from_bands(
            [self.S1, self.S12, self.S2],
            [[self.sigma1 + self.c1, 0.0], [self.sigma1, self.sigma2],
             [0.0, self.sigma2 + self.c2]])

    def mirrored(self) -> "PartialOverlapSolution":
        """The same allocation described with user labels exchanged."""
        swap = {"power1": "power2", "power2": "power1", "gamma1": "gamma2",
                "gamma2": "gamma1"}
        res = {swap.get(k, k): v for k, v in self.residuals.items()}
        sub = {"s1_zero": "s2_zero", "s2_zero": "s1_zero"}.get(self.subcase, self.subcase)
        return replace(self, S1=self.S2, S2=self.S1, sigma1=self.sigma2, sigma2=self.sigma1,
                       c1=self.c2, c2=self.c1, capacities=self.capacities[::-1].copy(),
                       residuals=res, subcase=sub)


def equation_residuals(sol: PartialOverlapSolution, scenario: Scenario,
                       rule: str = "exclusive_density") -> Dict[str, Optional[float]]:
    """Scaled residuals of the six conditions at ``sol``.

    Widths are scaled by ``W``, powers by ``P_i``, the width condition by the
    sum of its two sides and each stationarity polynomial by the sum of its
    monomial magnitudes.  Conditions that do not apply to a degenerate
    subcase are ``None``.
    """
    W, P1, P2 = scenario.params[:3]
    s = sol
    out: Dict[str, Optional[float]] = {
        "bandwidth": abs(s.S1 + s.S2 + s.S12 - W) / W,
        "power1": abs(s.S1 * (s.sigma1 + s.c1) + s.S12 * s.sigma1 - P1) / P1,
        "power2": abs(s.S2 * (s.sigma2 + s.c2) + s.S12 * s.sigma2 - P2) / P2,
        "width_ratio": None,
        "gamma1": None,
        "gamma2": None,
    }
    if s.S1 > 0:
        out["gamma1"] = abs(gamma1(s.sigma1, s.sigma2, s.c1, scenario)) / \
            _gamma_scale(s.sigma1, s.sigma2, s.c1, scenario, 0)
    if s.S2 > 0:
        out["gamma2"] = abs(gamma2(s.sigma1, s.sigma2, s.c2, scenario)) / \
            _gamma_scale(s.sigma2, s.sigma1, s.c2, scenario, 1)
    if s.S1 > 0 and s.S2 > 0:
        out["width_ratio"] = _width_condition_scaled(s, scenario, rule)
    return out


def _width_condition_scaled(s: PartialOverlapSolution, scenario: Scenario, rule: str) -> float:
    W, P1, P2, N1, N2, h11, h12, h21, h22 = scenario.params
    if rule == "exclusive_density":
        left, right = (s.c2 + s.sigma2) * N1 * h22, (s.c1 + s.sigma1) * N2 * h11
    else:
        left, right = s.S1 * N1 * P2 * h22, s.S2 * N2 * P1 * h11
    return abs(left - right) / (abs(left) + abs(right))


def _other_rule(rule):
    return WIDTH_RULES[1 - WIDTH_RULES.index(rule)]


# -- one-parameter families ---------------------------------------------------

class _Family:
    """A curve of candidate allocations parameterised by one density.

    Subclasses provide the parameter range, the scan range of the eliminated
    unknown, a residual vectorised over that unknown and the reconstruction
    of the full allocation.
    """

    subcase = "interior"

    def __init__(self, scenario: Scenario, options: SolverOptions, base: float):
        self.scenario = scenario
        self.options = options
        self.base = base
        self.bounds = (sigma1_upper_bound(scenario), sigma2_upper_bound(scenario))

    def in_box(self, sol: PartialOverlapSolution) -> bool:
        """Shared densities inside the search box ``(0, bound]`` of both users."""
        return 0 < sol.sigma1 <= self.bounds[0] and 0 < sol.sigma2 <= self.bounds[1]

    def parameter_grid(self) -> np.ndarray:
        raise NotImplementedError

    def unknown_grid(self) -> np.ndarray:
        raise NotImplementedError

    def residual(self, x, t):
        raise NotImplementedError

    def build(self, t: float, x: float) -> Optional[PartialOverlapSolution]:
        raise NotImplementedError

    def feasible(self, sol: PartialOverlapSolution) -> bool:
        raise NotImplementedError

    # shared machinery

    def roots(self, t: float) -> np.ndarray:
        return _sign_change_roots(lambda x: self.residual(x, t), self.unknown_grid(),
                                  self.options.refine_rtol)

    def roots_on_grid(self, ts: np.ndarray) -> List[np.ndarray]:
        """:meth:`roots` for every parameter value, scanned and refined in one batch."""
        xs = self.unknown_grid()
        T, X = np.meshgrid(ts, xs, indexing="ij")
        values = self.residual(X, T)
        sign = np.sign(values)
        rows, cols = np.nonzero(sign[:, :-1] * sign[:, 1:] < 0)
        exact_rows, exact_cols = np.nonzero(values == 0)
        t_b = ts[rows]
        roots = _bisect_brackets(lambda x: self.residual(x, t_b), xs[cols], xs[cols + 1],
                                 self.options.refine_rtol)
        out: List[List[float]] = [[] for _ in ts]
        for r, x in zip(rows, roots):
            out[r].append(float(x))
        for r, c in zip(exact_rows, exact_cols):
            out[r].append(float(xs[c]))
        return [np.sort(np.array(v)) for v in out]

    def track(self, t: float, guess: float) -> Optional[float]:
        """Root near ``guess`` at parameter ``t``."""
        fun = lambda x: self.residual(x, t)  # noqa: E731
        f0 = fun(guess)
        if f0 == 0:
            return guess
        for delta in (1e-6, 1e-4, 1e-3, 1e-2, 5e-2, 0.2):
            lo, hi = guess * (1 - delta), guess * (1 + delta)
            flo, fhi = fun(lo), fun(hi)
            if np.sign(flo) != np.sign(f0):
                return brentq(fun, lo, guess, xtol=1e-300, rtol=self.options.refine_rtol)
            if np.sign(fhi) != np.sign(f0):
                return brentq(fun, guess, hi, xtol=1e-300, rtol=self.options.refine_rtol)
        roots = self.roots(t)
        if roots.size == 0:
            return None
        return float(roots[np.argmin(np.abs(roots - guess))])

    def point(self, t: float, x: float) -> Optional[PartialOverlapSolution]:
        try:
            return self.build(t, x)
        except (SingularPointError, ZeroDivisionError, ValueError):
            return None


class _InteriorFamily(_Family):
    """Both exclusive bands non-empty; sweep ``sigma2``, solve for ``sigma1``."""

    subcase = "interior"

    def parameter_grid(self):
        hi = sigma2_upper_bound(self.scenario)
        P = sum(self.scenario.power)
        eps = 1e-9 * P / self.scenario.bandwidth
        return _mixed_grid(eps, hi, self.options.sigma2_samples)

    def unknown_grid(self):
        hi = sigma1_upper_bound(self.scenario)
        return _mixed_grid(hi * 1e-9, hi, self.options.scan_samples)

    def residual(self, x, t):
        return _cleared_residual(x, t, self.scenario, self.options.width_rule)

    def build(self, t, x):
        sc = self.scenario
        sigma1, sigma2 = float(x), float(t)
        c1, c2 = solve_c_from_gammas(sigma1, sigma2, sc)
        S1, S2, S12 = widths_from_powers(sigma1, sigma2, c1, c2, sc)
        return self._assemble(S1, S2, S12, sigma1, sigma2, c1, c2, t)

    def _assemble(self, S1, S2, S12, sigma1, sigma2, c1, c2, t):
        sc = self.scenario
        ok = min(S1, S2, S12, sigma1, sigma2, c1, c2) > 0
        if ok:
            B = objective_B(S1, S2, S12, sigma1, sigma2, c1, c2, sc, self.base)
            caps = _capacities(S1, S2, S12, sigma1, sigma2, c1, c2, sc, self.base)
        else:
            B, caps = float("nan"), np.array([np.nan, np.nan])
        sol = PartialOverlapSolution(S1, S2, S12, sigma1, sigma2, c1, c2, B, caps, {},
                                     subcase=self.subcase, parameter=float(t))
        return sol

    def feasible(self, sol):
        return min(sol.S1, sol.S2, sol.S12, sol.c1, sol.c2) > 0 and self.in_box(sol)


class _LeftEmptyFamily(_Family):
    """``S1 = 0``: user 1 only in the shared band.  Sweep ``sigma2``, solve for ``S12``.

    ``sigma1 = P1 / S12`` and ``S2 = W - S12``; ``c2`` comes from user 2's
    stationarity condition and the residual is user 2's power budget.
    """

    subcase = "s1_zero"

    def parameter_grid(self):
        W, P1, P2 = self.scenario.params[:3]
        hi = P2 / W
        eps = 1e-9 * (P1 + P2) / W
        return _mixed_grid(eps, hi, self.options.sigma2_samples)

    def unknown_grid(self):
        W = self.scenario.bandwidth
        return _mixed_grid(W * 1e-9, W, self.options.scan_samples)

    def residual(self, x, t):
        W, P1, P2 = self.scenario.params[:3]
        S12 = x
        sigma1 = P1 / S12
        view = _user_view(self.scenario, 1)
        A2 = _gamma.gamma_offset(t, sigma1, **view)
        K2 = _gamma.gamma_slope(t, sigma1, **view)
        # K2 * (P2 - S2 (sigma2 + c2) - S12 sigma2) with c2 = -A2 / K2
        return P2 * K2 - (W - S12) * (t * K2 - A2) - S12 * t * K2

    def build(self, t, x):
        sc = self.scenario
        W, P1, P2 = sc.params[:3]
        S12 = float(x)
        sigma2 = float(t)
        sigma1 = P1 / S12
        c2 = float(_solve_c(sigma2, sigma1, sc, 1))
        S2 = W - S12
        ok = S2 > 0 and c2 > 0
        if ok:
            B = objective_B(0.0, S2, S12, sigma1, sigma2, 0.0, c2, sc, self.base)
            caps = _capacities(0.0, S2, S12, sigma1, sigma2, 0.0, c2, sc, self.base)
        else:
            B, caps = float("nan"), np.array([np.nan, np.nan])
        return PartialOverlapSolution(0.0, S2, S12, sigma1, sigma2, 0.0, c2, B, caps, {},
                                      subcase=self.subcase, parameter=float(t))

    def feasible(self, sol):
        return sol.S2 > 0 and sol.S12 > 0 and sol.c2 > 0 and self.in_box(sol)


# -- sweeping a family ----------------------------------------------------------

@dataclass
class _Sample:
    t: float
    x: float
    sol: Optional[PartialOverlapSolution]
    ok: bool


def _branch_value(fam: _Family, t: float, guess: float):
    x = fam.track(t, guess)
    if x is None:
        return None, None
    sol = fam.point(t, x)
    if sol is None or not fam.feasible(sol):
        return x, None
    return x, sol


def _central_slope(fam: _Family, t: float, guess: float, rel: float = 1e-5):
    h = rel * t
    _, up = _branch_value(fam, t + h, guess)
    _, dn = _branch_value(fam, t - h, guess)
    if up is None or dn is None:
        return None
    return (up.B - dn.B) / (2 * h)


def _refine_maximum(fam: _Family, left: _Sample, mid: _Sample, right: _Sample):
    """Bisection on the sign of dB/dt between ``left.t`` and ``right.t``."""
    lo, hi = left.t, right.t
    guess = mid.x
    s_lo = _central_slope(fam, lo, left.x)
    s_hi = _central_slope(fam, hi, right.x)
    if s_lo is None or s_hi is None or not (s_lo > 0 > s_hi):
        # fall back to the sampled maximum
        return mid.sol, mid.x
    best_x = guess
    for _ in range(80):
        t = 0.5 * (lo + hi)
        x, sol = _branch_value(fam, t, best_x)
        if sol is None:
            break
        best_x = x
        s = _central_slope(fam, t, x)
        if s is None:
            break
        if s > 0:
            lo = t
        else:
            hi = t
        if hi - lo <= 1e-13 * hi:
            break
    t = 0.5 * (lo + hi)
    x, sol = _branch_value(fam, t, best_x)
    if sol is None or sol.B < mid.sol.B:
        return mid.sol, mid.x
    return sol, x


def _refine_boundary(fam: _Family, inside: _Sample, outside_t: float):
    """Push a feasible branch end towards the point where it leaves the feasible set."""
    lo, hi = inside.t, outside_t
    best = inside.sol
    x = inside.x
    for _ in range(60):
        t = 0.5 * (lo + hi)
        xt, sol = _branch_value(fam, t, x)
        if sol is None:
            hi = t
        else:
            lo, best, x = t, sol, xt
        if abs(hi - lo) <= 1e-12 * max(abs(hi), abs(lo)):
            break
    return best, x


def _sweep(fam: _Family, collect_rows: bool = False):
    """Follow every root branch of ``fam`` and return local maxima of ``B``.

    Branches are identified as the j-th smallest root inside stretches of
    consecutive grid points that have the same number of roots.
    """
    grid = fam.parameter_grid()
    per_t: List[List[_Sample]] = []
    for t, xs in zip(grid, fam.roots_on_grid(grid)):
        samples = []
        for x in xs:
            sol = fam.point(float(t), float(x))
            samples.append(_Sample(float(t), float(x), sol,
                                   sol is not None and fam.feasible(sol)))
        per_t.append(samples)

    found: List[PartialOverlapSolution] = []
    n = len(grid)
    start = 0
    while start < n:
        count = len(per_t[start])
        stop = start
        while stop + 1 < n and len(per_t[stop + 1]) == count:
            stop += 1
        for j in range(count):
            branch = [per_t[i][j] for i in range(start, stop + 1)]
            found.extend(_branch_maxima(fam, branch, j))
        start = stop + 1

    if collect_rows:
        return found, per_t, grid
    return found


def _branch_maxima(fam: _Family, branch: Sequence[_Sample], j: int):
    out = []
    m = len(branch)
    i = 0
    while i < m:
        if not branch[i].ok:
            i += 1
            continue
        k = i
        while k + 1 < m and branch[k + 1].ok:
            k += 1
        run = branch[i:k + 1]
        values = [s.sol.B for s in run]
        for r, s in enumerate(run):
            left_v = values[r - 1] if r > 0 else -math.inf
            right_v = values[r + 1] if r + 1 < len(run) else -math.inf
            if not (values[r] >= left_v and values[r] >= right_v):
                continue
            interior = 0 < r < len(run) - 1
            if interior:
                sol, x = _refine_maximum(fam, run[r - 1], s, run[r + 1])
                out.append(_finish(fam, sol, x, j, endpoint=False))
            else:
                # branch end: move it to the edge of the feasible stretch if possible
                at_left = r == 0
                idx = i if at_left else k
                neighbour = idx - 1 if at_left else idx + 1
                sol, x = s.sol, s.x
                if 0 <= neighbour < m:
                    sol, x = _refine_boundary(fam, s, branch[neighbour].t)
                out.append(_finish(fam, sol, x, j, endpoint=True))
        i = k + 1
    return out


def _finish(fam: _Family, sol: PartialOverlapSolution, x: float, branch: int, endpoint: bool):
    slope = _central_slope(fam, sol.parameter, x, rel=1e-4)
    stat = None
    if slope is not None and sol.B != 0:
        stat = abs(sol.parameter * slope) / abs(sol.B)
    return replace(sol, branch=branch, endpoint=endpoint, stationarity=stat)


class _MirroredFamily:
    """Run a family on the user-swapped scenario and map results back."""

    def __init__(self, family_cls, scenario, options, base):
        self.inner = family_cls(scenario.swapped(), options, base)

    def sweep(self):
        return [s.mirrored() for s in _sweep(self.inner)]


def _attach_residuals(sol: PartialOverlapSolution, scenario: Scenario, rule: str):
    res = equation_residuals(sol, scenario, rule)
    diag = dict(sol.diagnostics)
    if sol.S1 > 0 and sol.S2 > 0:
        diag[f"{_other_rule(rule)}_residual"] = _width_condition_scaled(
            sol, scenario, _other_rule(rule))
    diag["sigma2_bound"] = sigma2_upper_bound(scenario)
    return replace(sol, residuals=res, diagnostics=diag)


def solve_partial_overlap(scenario: Scenario, options: Optional[SolverOptions] = None,
                          base: float = 2.0) -> List[PartialOverlapSolution]:
    """All feasible stationary points and branch ends of the partial-overlap curves.

    Only meaningful for flat gains and equal weights.  Candidates whose
    scaled residuals exceed ``options.tol`` are dropped (and logged).  An
    empty list is a legitimate outcome: the optimum is then disjoint or fully
    shared.
    """
    if not scenario.is_flat:
        raise UnsupportedInstanceError("partial-overlap analysis needs flat gains")
    options = options or SolverOptions()
    rule = options.width_rule
    raw = _sweep(_InteriorFamily(scenario, options, base))
    if options.subcases:
        raw += _sweep(_LeftEmptyFamily(scenario, options, base))
        raw += _MirroredFamily(_LeftEmptyFamily, scenario, options, base).sweep()
    out = []
    for sol in raw:
        sol = _attach_residuals(sol, scenario, rule)
        if sol.max_residual > options.tol:
            logger.info("dropping %s candidate at parameter %.6g: residual %.3g",
                        sol.subcase, sol.parameter, sol.max_residual)
            continue
        out.append(sol)
    out.sort(key=lambda s: (SUBCASE_ORDER[s.subcase], s.sigma2, s.sigma1, s.branch))
    return _dedupe(out, scenario)


def _dedupe(sols: List[PartialOverlapSolution], scenario: Scenario, rtol: float = 1e-6):
    """Drop near-identical candidates; keeps the one with the larger ``B``."""
    W = scenario.bandwidth
    dens = sum(scenario.power) / W
    scales = dict(S1=W, S2=W, S12=W, sigma1=dens, sigma2=dens, c1=dens, c2=dens)
    kept: List[PartialOverlapSolution] = []
    for s in sols:
        match = None
        for n, k in enumerate(kept):
            if k.subcase == s.subcase and all(
                    abs(k.variables[v] - s.variables[v]) <= rtol * scales[v] for v in scales):
                match = n
                break
        if match is None:
            kept.append(s)
        elif s.B > kept[match].B:
            kept[match] = s
    return kept


class SweepRow(NamedTuple):
    """One ``(sigma2, sigma1)`` root of the width condition on the interior curve."""

    sigma2: float
    branch: int
    sigma1: float
    B: float
    feasible: bool


def sweep_curve(scenario: Scenario, samples: int = 200, options: Optional[SolverOptions] = None,
                base: float = 2.0) -> List[SweepRow]:
    """Tabulate the interior partial-overlap curve.

    ``samples`` values of ``sigma2`` are spaced uniformly over
    ``(0, gamma (P1 + P2) / W]``.  Every ``sigma1`` root at a sample yields a
    row; ``branch`` is the root's rank at that sample.  Rows whose
    reconstruction has a non-positive width, density or increment are marked
    infeasible and carry ``B = nan``.
    """
    if not scenario.is_flat:
        raise UnsupportedInstanceError("partial-overlap analysis needs flat gains")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    options = options or SolverOptions()
    fam = _InteriorFamily(scenario, options, base)
    hi = sigma2_upper_bound(scenario)
    ts = hi * np.arange(1, samples + 1) / samples
    rows: List[SweepRow] = []
    for t, xs in zip(ts, fam.roots_on_grid(ts)):
        for j, x in enumerate(xs):
            sol = fam.point(float(t), float(x))
            ok = sol is not None and fam.feasible(sol)
            rows.append(SweepRow(float(t), j, float(x), sol.B if ok else float("nan"), ok))
    return rows


# -- best of three ----------------------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    """One allocation considered by :func:`solve`."""

    form: str
    value: float
    capacities: np.ndarray
    psd: PiecewisePsd
    solution: object
    residuals: Optional[Dict[str, Optional[float]]] = None
    diagnostics: Dict[str, object] = field(default_factory=dict)

    @property
    def sort_key(self):
        sol = self.solution
        if isinstance(sol, PartialOverlapSolution):
            return (FORM_ORDER[self.form], SUBCASE_ORDER[sol.subcase], sol.sigma2, sol.sigma1)
        return (FORM_ORDER[self.form], 0, 0.0, 0.0)


@dataclass(frozen=True)
class SolveReport:
    """Outcome of :func:`solve`: the winning candidate and everything considered."""

    best: Candidate
    objective: Objective
    candidates: List[Candidate]
    options: SolverOptions
    notes: List[str] = field(default_factory=list)

    @property
    def value(self) -> float:
        return self.best.value

    @property
    def capacities(self) -> np.ndarray:
        return self.best.capacities

    @property
    def form(self) -> str:
        return self.best.form

    @property
    def psd(self) -> PiecewisePsd:
        return self.best.psd


def _pick_best(candidates: Sequence[Candidate], rtol: float = 1e-12) -> Candidate:
    top = max(c.value for c in candidates)
    for c in candidates:  # already ordered fdma < full_share < partial
        if c.value >= top - rtol * abs(top):
            return c
    raise AssertionError("unreachable")


def solve(scenario: Scenario, objective: Optional[Objective] = None,
          options: Optional[SolverOptions] = None) -> SolveReport:
    """Best of the disjoint, fully shared and partially overlapping allocations.

    Raises
    ------
    UnsupportedInstanceError
        For frequency-selective gains; use :func:`sapd.oracle.brute_force`.
    """
    if not scenario.is_flat:
        raise UnsupportedInstanceError(
            "analytic solver needs flat gains; run the discretized oracle instead")
    objective = objective or Objective()
    options = options or SolverOptions()
    notes: List[str] = []

    fd = fdma_optimum(scenario, objective)
    fs = full_share_capacity(scenario, objective)
    cands = [
        Candidate("fdma", fd.value, fd.capacities, fd.psd, fd,
                  diagnostics={"split": fd.split, "closed_form": fd.closed_form}),
        Candidate("full_share", fs.value, fs.capacities, fs.psd, fs),
    ]
    equal_weights = scenario.weights[0] == scenario.weights[1]
    if not equal_weights:
        notes.append("analytic partial overlap unavailable: weights are not uniform")
    else:
        if objective.kind == "product":
            notes.append("partial-overlap candidates are sum-capacity stationary points "
                         "ranked by the product objective")
        for sol in solve_partial_overlap(scenario, options, objective.base):
            value = objective_value(sol.capacities, scenario.weights, objective)
            cands.append(Candidate("partial", value, sol.capacities, sol.psd(), sol,
                                   residuals=sol.residuals, diagnostics=dict(sol.diagnostics)))
    cands.sort(key=lambda c: c.sort_key)
    best = _pick_best(cands)
    return SolveReport(best=best, objective=objective, candidates=cands, options=options,
                       notes=notes)
