"""Exception types shared across the package.

The CLI maps ValidationError-family exceptions to exit code 1 and
runtime failures to exit code 2, so keeping them in one place makes
that mapping explicit.
"""


class UcScreenError(Exception):
    """Base class for all package-specific errors."""


class ParseError(UcScreenError):
    """A document does not match the expected file schema."""


class ValidationError(UcScreenError):
    """Structurally well-formed data violates a semantic invariant."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DisconnectedError(ValidationError):
    """The network graph is not connected."""


class DimensionError(UcScreenError):
    """A vector or matrix has an incompatible shape."""


class NumericalError(UcScreenError):
    """The LP solver failed to make progress (reserved; should not occur
    with Bland's rule active)."""


class NodeLimitExceeded(UcScreenError):
    """Branch-and-bound explored more nodes than allowed."""


class ScreeningInfeasible(UcScreenError):
    """A screening LP is infeasible, typically because the cost bound is
    below the minimal feasible cost for the load."""

    def __init__(self, line, message=None):
        self.line = line
        super().__init__(message or f"screening LP infeasible for line {line}")


class ContextMismatch(UcScreenError):
    """A screening report does not cover the load it is applied to."""


class EmptyDataset(UcScreenError):
    """A training dataset contains no samples."""


class InsufficientData(UcScreenError):
    """Fewer samples available than the operation requires."""


class EmptyRegion(UcScreenError):
    """A load region admits no feasible point."""


class InfeasibleSample(UcScreenError):
    """A sampled load admits no feasible commitment."""
