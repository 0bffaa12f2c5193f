"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`LapboxError`, so callers (and the CLI exit-code mapping) can
separate numerical failures from configuration mistakes.
"""


class LapboxError(Exception):
    """Base class for all package errors."""


class ConfigError(LapboxError, ValueError):
    """Invalid parameters or configuration file."""


class AliasingError(LapboxError, ValueError):
    """A dual grid is too coarse for the lattice box it must represent."""


class MeshConditionError(LapboxError, ValueError):
    """Trapezoid grid too coarse for the imaginary part of the spectral point."""


class DivergenceError(LapboxError, ArithmeticError):
    """An extrapolation or contour evaluation failed to converge."""


class BudgetError(LapboxError, ValueError):
    """A box is too small for the wraparound budget of a propagation."""


class SpectralIntervalError(LapboxError, ValueError):
    """A Chebyshev interval does not contain the spectrum."""


class FitRejected(LapboxError, ArithmeticError):
    """A power-law fit exceeded its residual threshold."""

    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


class InadmissibleExponents(LapboxError, ValueError):
    """Exponent triple outside the range of the requested bound."""


class ChartRejected(LapboxError, ValueError):
    """Level set leaves the graph regime on the requested patch."""


class QuadratureError(LapboxError, ArithmeticError):
    """Adaptive quadrature did not converge."""
