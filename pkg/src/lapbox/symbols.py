"""The lattice symbol h0 and exponent bookkeeping.

h0(xi) = 4 sum_j sin^2(pi xi_j) takes values in [0, 4d]; its critical
values are {0, 4, ..., 4d}.  The remaining helpers encode the exponent
region S_k, the duality-line endpoint, the Hoelder exponent beta_delta
and the pair (3_*, 3^*).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ConfigError

__all__ = [
    "Symbol",
    "H0",
    "h0_eval",
    "h0_grad",
    "critical_values",
    "distance_to_critical",
    "ExponentPair",
    "HolderSpec",
    "in_region_Sk",
    "duality_line_pmax",
    "beta_delta",
    "discrete_exponents",
    "curvature_window",
    "conjugate_exponent",
]

BOUNDARY_TOL = 1e-12


def h0_eval(d: int, xi) -> np.ndarray:
    """``4 sum sin^2(pi xi_j)``; ``xi`` has trailing axis of length ``d``."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != d:
        raise ConfigError(f"expected trailing dimension {d}, got shape {xi.shape}")
    return 4.0 * np.sum(np.sin(np.pi * xi) ** 2, axis=-1)


def h0_grad(d: int, xi) -> np.ndarray:
    """Gradient ``(4 pi sin 2 pi xi_j)_j``."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != d:
        raise ConfigError(f"expected trailing dimension {d}, got shape {xi.shape}")
    return 4.0 * np.pi * np.sin(2 * np.pi * xi)


@dataclass(frozen=True)
class Symbol:
    """A real symbol on the torus with its gradient."""

    d: int
    eval: Callable
    gradient: Callable


def H0(d: int) -> Symbol:
    return Symbol(d, lambda xi: h0_eval(d, xi), lambda xi: h0_grad(d, xi))


def critical_values(d: int) -> list[float]:
    if d < 1:
        raise ConfigError("d must be >= 1")
    return [4.0 * k for k in range(d + 1)]


def distance_to_critical(d: int, lam: float) -> float:
    return min(abs(lam - c) for c in critical_values(d))


def conjugate_exponent(p: float) -> float:
    """Hoelder conjugate ``p*`` with ``1/p + 1/p* = 1``."""
    if p == 1:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class ExponentPair:
    """The point ``(1/p, 1/q)`` of the exponent square."""

    inv_p: float
    inv_q: float

    def __post_init__(self):
        for v in (self.inv_p, self.inv_q):
            if not 0 <= v <= 1:
                raise ConfigError(f"exponent reciprocal {v} outside [0, 1]")

    @classmethod
    def from_pq(cls, p, q) -> "ExponentPair":
        inv = lambda r: 0 if np.isinf(float(r)) else (Fraction(1) / r if isinstance(r, Fraction) else 1.0 / r)
        return cls(inv(p), inv(q))

    @property
    def p(self) -> float:
        return np.inf if self.inv_p == 0 else 1.0 / float(self.inv_p)

    @property
    def q(self) -> float:
        return np.inf if self.inv_q == 0 else 1.0 / float(self.inv_q)


def in_region_Sk(pair: ExponentPair, k, exact: bool = False, tol: float = BOUNDARY_TOL) -> bool:
    """Membership in S_k.

    S_k = {1/q <= 1/p - 1/(k+1), (1+k)/(1+2k) < 1/p, 1/q < k/(1+2k)}.

    In float mode, non-strict inequalities are relaxed by ``tol`` and
    strict ones tightened by it.  ``exact=True`` evaluates in rationals
    (inputs are converted with :class:`fractions.Fraction`).
    """
    if k <= 0:
        raise ConfigError("k must be positive")
    if exact:
        a, b, kk = Fraction(pair.inv_p), Fraction(pair.inv_q), Fraction(k)
        return b <= a - 1 / (kk + 1) and (1 + kk) / (1 + 2 * kk) < a and b < kk / (1 + 2 * kk)
    a, b, kk = float(pair.inv_p), float(pair.inv_q), float(k)
    return (
        b <= a - 1 / (kk + 1) + tol
        and (1 + kk) / (1 + 2 * kk) < a - tol
        and b < kk / (1 + 2 * kk) - tol
    )


def duality_line_pmax(k):
    """Largest ``p`` on the duality line, ``2(k+1)/(k+2)``."""
    if k <= 0:
        raise ConfigError("k must be positive")
    return 2 * (k + 1) / (k + 2)


def beta_delta(p: float, delta: float) -> float:
    """Hoelder exponent ``(2/p - 1) delta``."""
    if not 1 <= p <= 2:
        raise ConfigError(f"p must lie in [1, 2], got {p}")
    if not 0 < delta <= 1:
        raise ConfigError(f"delta must lie in (0, 1], got {delta}")
    return (2.0 / p - 1.0) * delta


@dataclass(frozen=True)
class HolderSpec:
    k: float
    delta: float

    def __post_init__(self):
        if self.k <= 0:
            raise ConfigError("k must be positive")
        if not 0 < self.delta <= 1:
            raise ConfigError("delta must lie in (0, 1]")

    @property
    def k_delta(self) -> float:
        return self.k - self.delta

    def beta(self, p: float) -> float:
        return beta_delta(p, self.delta)


def discrete_exponents(d: int) -> tuple:
    """``(3_*, 3^*) = (2d/(d+3), 2d/(d-3))`` for ``d >= 4``."""
    if d <= 3:
        raise ConfigError(f"3^* is undefined or infinite for d={d}; need d >= 4")
    return Fraction(2 * d, d + 3), Fraction(2 * d, d - 3)


def curvature_window(d: int, reading: str = "union") -> list[tuple]:
    """Energy intervals where every level set of h0 is fully curved.

    The printed statement intersects a low-energy and a high-energy
    interval, which is empty; ``reading`` picks ``"union"`` (a list of
    the two intervals) or ``"intersection"`` (the literal, usually empty,
    result).
    """
    if d < 2:
        raise ConfigError("curvature window needs d >= 2")
    if d == 2:
        lo, hi = (0.0, 4.0), (4.0 * (d - 1), 4.0 * d)
    else:
        lo, hi = (0.0, 2.0), (4.0 * d - 2, 4.0 * d)
    if reading == "union":
        return [lo, hi]
    if reading == "intersection":
        a, b = max(lo[0], hi[0]), min(lo[1], hi[1])
        return [(a, b)] if a < b else []
    raise ConfigError(f"unknown reading {reading!r}")
