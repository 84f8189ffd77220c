"""Exception hierarchy shared by the solver, the oracle and the CLI."""


class SapdError(Exception):
    """Base class for every error raised by :mod:`sapd`."""

    exit_code = 1


class ValidationError(SapdError, ValueError):
    """An input (scenario, PSD, file) violates its invariants.

    ``field`` names the offending key when known, ``line`` the 1-based line
    number in the source file when parsing from text.
    """

    exit_code = 2

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        self.message = message
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class GainTableMismatchError(ValidationError):
    """A band partition does not line up with the frequency-selective gain table."""


class UnsupportedInstanceError(SapdError):
    """The analytic path cannot handle this instance (e.g. frequency-selective gains)."""

    exit_code = 3


class SingularPointError(SapdError, ArithmeticError):
    """An elimination step hit a vanishing denominator."""


class BudgetExceededError(SapdError):
    """The discretized oracle refused an instance that is too large.

    Attributes
    ----------
    work : int
        Estimated number of elementary table updates for the requested method.
    search_space : int
        Number of allocation pairs on the grid, ``C(L + k, k) ** 2``.
    budget : int
        The configured limit that ``work`` exceeded.
    """

    exit_code = 4

    def __init__(self, work, search_space, budget):
        self.work = int(work)
        self.search_space = int(search_space)
        self.budget = int(budget)
        super().__init__(
            f"oracle budget exceeded: estimated work {self.work:.3e} > budget "
            f"{self.budget:.3e} (grid holds {self.search_space:.3e} allocation pairs)"
        )
