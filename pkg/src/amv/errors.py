"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: InputError -> 2, ResourceError -> 3,
ConsistencyError -> 4.
"""


class AmvError(Exception):
    pass


class InputError(AmvError, ValueError):
    """Malformed or out-of-contract input."""


class DimensionError(InputError):
    pass


class DivisionError(AmvError, ArithmeticError):
    """Exact division left a nonzero remainder."""


class InadmissibleCentre(AmvError):
    """Centre is not contained in the cosupport (membership or divisibility failed)."""


class ResourceError(AmvError):
    """A configured budget (Groebner steps, year limit, digit cap) was exceeded."""


class BudgetExceeded(ResourceError):
    def __init__(self, budget, what="groebner reduction steps"):
        self.budget = budget
        super().__init__(f"budget exceeded: {what} > {budget}")


class YearLimitExceeded(ResourceError):
    def __init__(self, limit):
        self.limit = limit
        super().__init__(f"year limit {limit} reached before cosupport became empty")


class ConsistencyError(AmvError):
    """An internal check failed; this signals a bug, never bad input."""


class UnsupportedError(AmvError):
    """The driver met a configuration its coordinate-change strategy cannot handle."""
