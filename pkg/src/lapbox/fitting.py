"""Log-log power-law fits."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FitRejected

__all__ = ["DecayFit", "fit_power_law"]


@dataclass(frozen=True)
class DecayFit:
    """Result of fitting ``y ~ prefactor * s^(-exponent)``.

    ``exponent`` is reported as a decay rate, so a decaying quantity gives a
    positive value; growth fits (Hoelder slopes) set ``growth=True`` and
    report the raw slope instead.
    """

    exponent: float
    prefactor: float
    rms_residual: float
    window: tuple
    samples: np.ndarray = field(default=None, repr=False, compare=False)
    values: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.window[0] <= self.window[1]:
            raise ConfigError("empty fit window")


def fit_power_law(s, y, growth: bool = False, max_residual: float | None = None) -> DecayFit:
    """Least-squares line through ``(log s, log |y|)``.

    With ``growth=False`` the returned exponent is ``-slope``.  Raises
    :class:`FitRejected` when the rms residual in log space exceeds
    ``max_residual``.
    """
    s = np.asarray(s, float)
    a = np.abs(np.asarray(y))
    ok = (s > 0) & (a > 0) & np.isfinite(a)
    if ok.sum() < 2:
        raise FitRejected("fewer than two usable samples")
    ls, ly = np.log(s[ok]), np.log(a[ok])
    A = np.stack([ls, np.ones_like(ls)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    rms = float(np.sqrt(np.mean((A @ [slope, icpt] - ly) ** 2)))
    fit = DecayFit(
        exponent=float(slope if growth else -slope),
        prefactor=float(np.exp(icpt)),
        rms_residual=rms,
        window=(float(s[ok].min()), float(s[ok].max())),
        samples=s,
        values=np.asarray(y),
    )
    if max_residual is not None and not rms <= max_residual:
        raise FitRejected(f"rms log-residual {rms:.3g} exceeds {max_residual:.3g}", fit)
    return fit
