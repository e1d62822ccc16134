"""Exception hierarchy shared by all modules."""


class HardyCertError(Exception):
    """Base class for every error raised by the toolkit."""


class ConfigError(HardyCertError):
    pass


# quadrature
class QuadratureError(HardyCertError):
    pass


class NonFiniteSample(QuadratureError):
    def __init__(self, x, value):
        super().__init__(f"integrand returned {value!r} at x={x!r}")
        self.x = x
        self.value = value


class NotConverged(QuadratureError):
    def __init__(self, result):
        super().__init__(
            f"quadrature did not converge: value={result.value!r}, "
            f"error estimate={result.error_estimate!r}"
        )
        self.result = result


# weights
class WeightError(HardyCertError):
    pass


class DomainError(WeightError, ValueError):
    pass


class SingularAtZero(WeightError):
    """h(0) is +inf for the requested family; `value` carries the extended value."""

    value = float("inf")


class MassInfinite(WeightError):
    pass


class Inconclusive(WeightError):
    pass


class BracketViolation(WeightError):
    """Computed median falls outside the analytic two-sided bracket."""


# criteria
class CriteriaError(HardyCertError):
    pass


class QOutOfRange(CriteriaError, ValueError):
    pass


class W1NotIntegrable(CriteriaError):
    pass


# hardy_construct
class HardyConstructError(HardyCertError):
    pass


class SignNotConstant(HardyConstructError):
    pass


class ConditionsViolated(HardyConstructError):
    def __init__(self, condition, detail=""):
        msg = f"condition violated: {condition}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.condition = condition


class NotDifferentiable(HardyConstructError):
    pass


# optimal_search
class SearchError(HardyCertError):
    pass


class PreconditionViolation(SearchError):
    pass


class WitnessNotFound(SearchError):
    pass


class DegenerateStiffness(SearchError):
    pass


# fastdiff
class FastDiffError(HardyCertError):
    pass


class RangeViolation(FastDiffError, ValueError):
    pass


class StabilityViolation(FastDiffError):
    pass


class PositivityLoss(FastDiffError):
    def __init__(self, cell, value):
        super().__init__(f"nonpositive value {value!r} in cell {cell}")
        self.cell = cell
        self.value = value
