"""Exception types shared across the package."""


class FewBodyError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(FewBodyError, ValueError):
    """Operator shapes are incompatible or not square."""


class ModelError(FewBodyError, ValueError):
    """A model description violates its invariants."""


class SolveError(FewBodyError, RuntimeError):
    """A linear solve failed or did not meet the residual tolerance."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class QuadratureError(FewBodyError, ValueError):
    """A quadrature grid cannot support the requested computation."""


class ConfigError(FewBodyError, ValueError):
    """A run configuration is malformed or violates an invariant."""
