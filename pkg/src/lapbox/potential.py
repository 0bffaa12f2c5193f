"""Real potentials with finite (or truncated) support."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError
from .lattice import LatticeBox, LatticeFunction

__all__ = ["Potential"]


@dataclass(frozen=True, eq=False)
class Potential:
    """``V = sum_i values[i] * delta_{sites[i]}``.

    ``W1 = sgn(V)|V|^{1/2}`` and ``W2 = |V|^{1/2}`` are indexed like the
    sites, so ``W1 * W2 == values``.
    """

    d: int
    sites: np.ndarray
    values: np.ndarray
    support_threshold: float = 1e-10
    truncation_radius: float = float("nan")
    discarded_l2: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.sites, dtype=np.int64).reshape(-1, self.d)
        v = np.asarray(self.values, dtype=float).ravel()
        if s.shape[0] != v.size:
            raise ConfigError("sites and values have different lengths")
        if not np.all(np.isfinite(v)):
            raise ConfigError("potential values must be finite")
        keep = np.abs(v) >= self.support_threshold
        s, v = s[keep], v[keep]
        if len(np.unique(s, axis=0)) != len(s):
            raise ConfigError("duplicate sites in potential")
        s.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "sites", s)
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls, d: int) -> "Potential":
        return cls(d, np.zeros((0, d), int), np.zeros(0))

    @classmethod
    def single_site(cls, d: int, v: float, x=None) -> "Potential":
        x = np.zeros(d, int) if x is None else np.asarray(x)
        return cls(d, x[None, :], [v])

    @classmethod
    def from_function(cls, d: int, fn: Callable, R: int, threshold: float = 1e-10) -> "Potential":
        """Sample ``fn(x)`` (x of shape ``(n, d)``) on ``|x|_inf <= R`` and drop tiny values."""
        pts = LatticeBox(d, R).coords()
        vals = np.asarray(fn(pts), float)
        small = np.abs(vals) < threshold
        radius = float(np.linalg.norm(pts[~small], axis=1).max(initial=0.0))
        return cls(d, pts, vals, threshold, radius, float(np.linalg.norm(vals[small])))

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def W1(self) -> np.ndarray:
        return np.sign(self.values) * np.sqrt(np.abs(self.values))

    @property
    def W2(self) -> np.ndarray:
        return np.sqrt(np.abs(self.values))

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max(initial=0.0))

    def lp_norm(self, p: float) -> float:
        if np.isinf(p):
            return self.sup_norm()
        return float(np.sum(np.abs(self.values) ** p) ** (1 / p))

    def sign_definite(self) -> int:
        """+1 if V >= 0, -1 if V <= 0, 0 if indefinite (or zero)."""
        if self.size == 0:
            return 0
        if np.all(self.values >= 0):
            return 1
        if np.all(self.values <= 0):
            return -1
        return 0

    def extent(self) -> int:
        return int(np.abs(self.sites).max(initial=0))

    def scaled(self, c: float) -> "Potential":
        return Potential(self.d, self.sites, c * self.values, self.support_threshold)

    def on_torus(self, N: int) -> np.ndarray:
        if 2 * self.extent() + 1 > N:
            raise ConfigError("potential support does not fit on the torus")
        out = np.zeros((N,) * self.d)
        out[tuple((self.sites % N).T)] = self.values
        return out

    def on_box(self, box: LatticeBox) -> LatticeFunction:
        if self.extent() > box.L:
            raise ConfigError("potential support exceeds the box")
        out = np.zeros(box.shape)
        out[tuple((self.sites + box.L).T)] = self.values
        return LatticeFunction(box, out)
