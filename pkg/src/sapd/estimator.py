"""Estimator-style wrappers around the analytic solver and the oracle.

Both estimators take a :class:`~sapd.model.Scenario` as the ``X`` argument
of :meth:`fit`.  After fitting, :meth:`transform` maps an array of
frequencies to the two users' power densities, shape ``(n, 2)``, and
:meth:`score` returns the optimal objective value.  Hyper-parameters follow
the usual ``get_params`` / ``set_params`` contract.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ValidationError
from .io import ScenarioFile
from .model import Objective, Scenario, capacity_of, objective_value
from .oracle import (
    DEFAULT_BUDGET,
    brute_force,
    discretize,
    verify_max_power,
    verify_rectangular_structure,
)
from .partial_overlap import SolverOptions, solve

__all__ = ["check_scenario", "check_frequencies", "SpectrumAllocator", "DiscretizedOracle"]


def check_scenario(X) -> Scenario:
    """Coerce ``X`` to a :class:`Scenario`.

    Accepts a scenario, a parsed :class:`~sapd.io.ScenarioFile`, or a mapping
    with the :class:`Scenario` constructor's keyword arguments.
    """
    if isinstance(X, Scenario):
        return X
    if isinstance(X, ScenarioFile):
        return X.scenario
    if isinstance(X, Mapping):
        try:
            return Scenario(**X)
        except TypeError as exc:
            raise ValidationError(f"cannot build a scenario: {exc}") from None
    raise ValidationError(f"expected a Scenario, got {type(X).__name__}")


def check_frequencies(X, bandwidth: float) -> np.ndarray:
    """Validate a 1-D array (or single column) of frequencies inside ``[0, bandwidth]``."""
    arr = check_array(X, ensure_2d=False, dtype=float)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValidationError(f"expected one column of frequencies, got {arr.shape[1]}")
        arr = arr[:, 0]
    if np.any(arr < 0) or np.any(arr > bandwidth):
        raise ValidationError(f"frequencies must lie in [0, {bandwidth!r}]")
    return arr


class _AllocatorMixin:
    # fit takes a scenario and transform takes frequencies, so there is no fit_transform
    def transform(self, X):
        """Power densities of both users at frequencies ``X``; shape ``(n, 2)``."""
        check_is_fitted(self, "psd_")
        return self.psd_.at(check_frequencies(X, self.scenario_.bandwidth))

    def score(self, X=None, y=None):
        """Objective value of the fitted allocation.

        When ``X`` is a scenario the fitted PSD is evaluated on it instead
        (its band must match the fitted one).
        """
        check_is_fitted(self, "psd_")
        if X is None:
            return self.value_
        sc = check_scenario(X)
        caps = capacity_of(sc, self.psd_, self.objective_.base)
        return objective_value(caps, sc.weights, self.objective_)


class SpectrumAllocator(_AllocatorMixin, BaseEstimator):
    """Best of the disjoint, fully shared and partially overlapping allocations.

    Parameters
    ----------
    objective : {"sum", "product"}
    log_base : {2, "e"}
    width_rule : {"exclusive_density", "total_power"}
        Condition tying the two exclusive bands together.
    sigma2_samples, scan_samples : int
        Grid sizes of the curve sweep.
    tol : float
        Acceptance threshold on scaled equation residuals.

    Attributes
    ----------
    report_ : SolveReport
    form_ : str
        ``fdma``, ``full_share`` or ``partial``.
    value_ : float
    capacities_ : ndarray of shape (2,)
    psd_ : PiecewisePsd
    """

    def __init__(self, objective="sum", log_base=2, width_rule="exclusive_density",
                 sigma2_samples=1024, scan_samples=1024, tol=1e-8):
        self.objective = objective
        self.log_base = log_base
        self.width_rule = width_rule
        self.sigma2_samples = sigma2_samples
        self.scan_samples = scan_samples
        self.tol = tol

    def fit(self, X, y=None):
        sc = check_scenario(X)
        self.objective_ = Objective(self.objective, self.log_base)
        options = SolverOptions(sigma2_samples=self.sigma2_samples,
                                scan_samples=self.scan_samples, tol=self.tol,
                                width_rule=self.width_rule)
        self.report_ = solve(sc, self.objective_, options)
        self.scenario_ = sc
        self.form_ = self.report_.form
        self.value_ = self.report_.value
        self.capacities_ = self.report_.capacities
        self.psd_ = self.report_.psd
        return self


class DiscretizedOracle(_AllocatorMixin, BaseEstimator):
    """Exact optimum over ``channels`` equal channels and ``levels`` power units.

    Parameters
    ----------
    channels, levels : int
    objective : {"sum", "product"}
    log_base : {2, "e"}
    budget : int
        Work limit; larger instances raise :class:`~sapd.exceptions.BudgetExceededError`.
    method : {"dp", "enumerate"}

    Attributes
    ----------
    allocation_ : Allocation
    value_ : float
    capacities_ : ndarray of shape (2,)
    psd_ : PiecewisePsd
    max_power_ : MaxPowerReport
    structure_ : StructureReport
    """

    def __init__(self, channels=16, levels=8, objective="sum", log_base=2,
                 budget=DEFAULT_BUDGET, method="dp"):
        self.channels = channels
        self.levels = levels
        self.objective = objective
        self.log_base = log_base
        self.budget = budget
        self.method = method

    def fit(self, X, y=None):
        sc = check_scenario(X)
        self.objective_ = Objective(self.objective, self.log_base)
        instance = discretize(sc, self.channels, self.levels)
        alloc = brute_force(instance, self.objective_, budget=self.budget, method=self.method)
        self.scenario_ = sc
        self.instance_ = instance
        self.allocation_ = alloc
        self.value_ = alloc.value
        self.capacities_ = alloc.capacities
        self.psd_ = alloc.psd()
        self.max_power_ = verify_max_power(alloc)
        self.structure_ = verify_rectangular_structure(alloc)
        return self
