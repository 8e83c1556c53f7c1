"""Exception types shared across the package.

Validation problems (bad inputs, malformed files, unsupported topology) derive
from ValidationError; numerical failures (non-convergence, unstable stepping)
derive from NumericalError. The CLI maps the former to exit code 1 and the
latter to exit code 2.
"""


class ValidationError(ValueError):
    """Input rejected before any numerics ran."""


class MeshFormatError(ValidationError):
    """Mesh file failed to parse.

    Carries the 1-based line number where parsing stopped, when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TopologyError(ValidationError):
    """Mesh topology unsupported by the requested operation."""


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its contract."""


class ConvergenceError(NumericalError):
    """Iterative solver exhausted its budget before reaching tolerance."""


class StabilityError(NumericalError):
    """Explicit time stepping diverged; a smaller step is required."""
