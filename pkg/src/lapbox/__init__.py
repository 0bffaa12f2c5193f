"""lapbox: numerical checks of resolvent, dispersive and scattering estimates
for the discrete Schroedinger operator on Z^d."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AliasingError,
    BudgetError,
    ChartRejected,
    ConfigError,
    DivergenceError,
    FitRejected,
    InadmissibleExponents,
    LapboxError,
    MeshConditionError,
    QuadratureError,
    SpectralIntervalError,
)
from .lattice import DualGrid, LatticeBox, LatticeFunction  # noqa: E402
from .potential import Potential  # noqa: E402
from .resolvent import QuadratureSpec, SpectralPoint, green_kernel, limiting_absorption  # noqa: E402

__all__ = [
    "__version__",
    "AliasingError",
    "BudgetError",
    "ChartRejected",
    "ConfigError",
    "DivergenceError",
    "FitRejected",
    "InadmissibleExponents",
    "LapboxError",
    "MeshConditionError",
    "QuadratureError",
    "SpectralIntervalError",
    "DualGrid",
    "LatticeBox",
    "LatticeFunction",
    "Potential",
    "QuadratureSpec",
    "SpectralPoint",
    "green_kernel",
    "limiting_absorption",
]
