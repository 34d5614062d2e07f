"""Exception types raised by the simulation laboratory."""


class DskgError(Exception):
    """Base class for all package errors."""


class InvalidParams(DskgError, ValueError):
    """A configuration value violates a model invariant."""


class StepSizeUnderflow(DskgError, ArithmeticError):
    """The adaptive integrator could not meet the tolerance."""


class OracleUnavailable(DskgError):
    """The Bessel-series oracle does not cover the requested parameters."""


class ShapeMismatch(DskgError, ValueError):
    pass


class EmptyTrace(DskgError, ValueError):
    pass


class GridTooCoarse(DskgError, ValueError):
    pass


class WindowTooWide(DskgError):
    """Periodic wrap-around contaminates a local dispersive measurement."""


class NonPositiveData(DskgError, ValueError):
    pass


class DimensionTooSmall(DskgError, ValueError):
    pass


class StepRejected(DskgError, ArithmeticError):
    """Step halving in the semilinear evolver reached its floor."""


class Diverged(DskgError):
    """Picard iterates grew for several consecutive iterations."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics
