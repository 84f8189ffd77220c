"""Two-user spectrum allocation and power distribution over a shared band.

The analytic solver compares the best disjoint split, full sharing and
partially overlapping allocations; a discretized exhaustive optimizer
provides an independent check.
"""

__version__ = "0.1.0"

from .closed_form import (  # noqa: E402
    fdma_capacity,
    fdma_optimum,
    full_share_capacity,
    sigma1_upper_bound,
    sigma2_upper_bound,
    single_user_capacity,
    two_band_power_split,
)
from .estimator import DiscretizedOracle, SpectrumAllocator  # noqa: E402
from .exceptions import (  # noqa: E402
    BudgetExceededError,
    GainTableMismatchError,
    SapdError,
    SingularPointError,
    UnsupportedInstanceError,
    ValidationError,
)
from .io import load_scenario, parse_scenario  # noqa: E402
from .model import (  # noqa: E402
    GainBand,
    Objective,
    PiecewisePsd,
    Scenario,
    capacity_of,
    objective_value,
    total_power,
)
from .oracle import (  # noqa: E402
    brute_force,
    discretize,
    verify_max_power,
    verify_rectangular_structure,
)
from .partial_overlap import (  # noqa: E402
    SolverOptions,
    equation_residuals,
    gamma1,
    gamma2,
    solve,
    solve_partial_overlap,
    sweep_curve,
)

__all__ = [
    "__version__",
    "BudgetExceededError",
    "DiscretizedOracle",
    "GainBand",
    "GainTableMismatchError",
    "Objective",
    "PiecewisePsd",
    "SapdError",
    "Scenario",
    "SingularPointError",
    "SolverOptions",
    "SpectrumAllocator",
    "UnsupportedInstanceError",
    "ValidationError",
    "brute_force",
    "capacity_of",
    "discretize",
    "equation_residuals",
    "fdma_capacity",
    "fdma_optimum",
    "full_share_capacity",
    "gamma1",
    "gamma2",
    "load_scenario",
    "objective_value",
    "parse_scenario",
    "sigma1_upper_bound",
    "sigma2_upper_bound",
    "single_user_capacity",
    "solve",
    "solve_partial_overlap",
    "sweep_curve",
    "total_power",
    "two_band_power_split",
    "verify_max_power",
    "verify_rectangular_structure",
]
