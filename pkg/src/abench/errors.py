"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class DegenerateInputError(ValueError):
    """Input is well-formed but degenerate (zero vector, zero matrix, ...)."""


class SingularMatrixError(ArithmeticError):
    """LU factorization met a pivot below the singularity threshold."""


class EvaluationError(ArithmeticError):
    """A residual or Jacobian evaluation produced a non-finite value."""


class DegenerateStepsError(ArithmeticError):
    """Consecutive update steps are (numerically) identical."""


class ProblemLookupError(KeyError):
    """Unknown problem id or unsupported size."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class MethodParseError(ValueError):
    """Method string does not follow the method grammar."""


class LinearSolveFailure(ArithmeticError):
    """The Jacobian could not be factorized at the current iterate."""


class NonFiniteError(ArithmeticError):
    """An iterate, residual or step became non-finite."""
