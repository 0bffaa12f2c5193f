"""Truncated lattice containers, norms and the discrete Fourier pairing.

A :class:`LatticeBox` is the cube ``{-L, ..., L}^d`` of Z^d.  Values of a
:class:`LatticeFunction` are stored as a dense ``(2L+1,)*d`` array whose
axis ``j`` runs over ``x_j = -L .. L``.  The Fourier convention is

    f^(xi) = sum_x f(x) exp(-2 pi i x.xi),   xi in T^d = (R/Z)^d,

sampled on the uniform grid ``{j/N}^d``; with this normalization
Parseval reads ``sum |f|^2 = N^{-d} sum |f^|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import fft as sfft

from .errors import AliasingError, ConfigError

__all__ = [
    "LatticeBox",
    "LatticeFunction",
    "DualGrid",
    "lp_norm",
    "besov_norm",
    "besov_shells",
    "dft",
    "idft",
    "to_torus",
    "from_torus",
    "h0_stencil",
]


@dataclass(frozen=True)
class LatticeBox:
    """The box ``{-L..L}^d`` with row-major linear indexing."""

    d: int
    L: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError(f"dimension must be a positive integer, got {self.d!r}")
        if int(self.L) != self.L or self.L < 1:
            raise ConfigError(f"half-width must be a positive integer, got {self.L!r}")

    @property
    def side(self) -> int:
        return 2 * self.L + 1

    @property
    def shape(self) -> tuple:
        return (self.side,) * self.d

    @property
    def size(self) -> int:
        return self.side**self.d

    def index(self, x) -> int | np.ndarray:
        """Linear index of point(s) ``x`` (shape ``(..., d)``)."""
        x = np.asarray(x, dtype=np.int64)
        if np.any(np.abs(x) > self.L):
            raise IndexError("point outside the box")
        return np.ravel_multi_index(tuple(np.moveaxis(x + self.L, -1, 0)), self.shape)

    def point(self, i) -> np.ndarray:
        """Inverse of :meth:`index`."""
        return np.stack(np.unravel_index(i, self.shape), axis=-1) - self.L

    def coords(self) -> np.ndarray:
        """All points, shape ``(size, d)``, in linear-index order."""
        return self.point(np.arange(self.size))

    def axes(self) -> list[np.ndarray]:
        """Open mesh of coordinates, broadcastable to :attr:`shape`."""
        r = np.arange(-self.L, self.L + 1)
        return np.ix_(*([r] * self.d))

    def radius(self) -> np.ndarray:
        """Euclidean norm ``|x|`` on the box."""
        return np.sqrt(sum(a.astype(float) ** 2 for a in self.axes()))

    def contains(self, other: "LatticeBox") -> bool:
        return self.d == other.d and self.L >= other.L


@dataclass(frozen=True, eq=False)
class LatticeFunction:
    """Complex values on a :class:`LatticeBox`."""

    box: LatticeBox
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.box.shape:
            v = v.reshape(self.box.shape)
        v = v.astype(complex, copy=True)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, box: LatticeBox) -> "LatticeFunction":
        return cls(box, np.zeros(box.shape, complex))

    @classmethod
    def delta(cls, box: LatticeBox, x=None) -> "LatticeFunction":
        v = np.zeros(box.shape, complex)
        x = np.zeros(box.d, int) if x is None else np.asarray(x)
        v[tuple(x + box.L)] = 1.0
        return cls(box, v)

    @classmethod
    def from_callable(cls, box: LatticeBox, fn: Callable) -> "LatticeFunction":
        """Evaluate ``fn(*coords)`` on the open mesh of the box."""
        return cls(box, np.broadcast_to(fn(*box.axes()), box.shape))

    @classmethod
    def random(cls, box: LatticeBox, rng: np.random.Generator) -> "LatticeFunction":
        v = rng.standard_normal(box.shape) + 1j * rng.standard_normal(box.shape)
        return cls(box, v)

    def __call__(self, x):
        return self.values[tuple(np.asarray(x) + self.box.L)]

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def restrict(self, box: LatticeBox) -> "LatticeFunction":
        """Restriction to a smaller centred box."""
        if not self.box.contains(box):
            raise ConfigError("target box is not contained in the source box")
        o = self.box.L - box.L
        sl = tuple(slice(o, o + box.side) for _ in range(box.d))
        return LatticeFunction(box, self.values[sl])

    def extend(self, box: LatticeBox) -> "LatticeFunction":
        """Zero extension to a larger centred box."""
        if not box.contains(self.box):
            raise ConfigError("target box does not contain the source box")
        out = np.zeros(box.shape, complex)
        o = box.L - self.box.L
        out[tuple(slice(o, o + self.box.side) for _ in range(box.d))] = self.values
        return LatticeFunction(box, out)

    def __add__(self, other):
        return LatticeFunction(self.box, self.values + _vals(other))

    def __sub__(self, other):
        return LatticeFunction(self.box, self.values - _vals(other))

    def __mul__(self, c):
        return LatticeFunction(self.box, self.values * _vals(c))

    __rmul__ = __mul__

    def conj(self) -> "LatticeFunction":
        return LatticeFunction(self.box, self.values.conj())


def _vals(o):
    return o.values if isinstance(o, LatticeFunction) else o


@dataclass(frozen=True)
class DualGrid:
    """Uniform grid ``{j/N : j = 0..N-1}^d`` on the torus."""

    d: int
    N: int

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError("dimension must be positive")
        if self.N < 2 or self.N % 2:
            raise ConfigError(f"grid size must be even and >= 2, got {self.N}")

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    def nodes(self) -> np.ndarray:
        """One-axis nodes ``j/N``."""
        return np.arange(self.N) / self.N

    def mesh(self) -> list[np.ndarray]:
        return np.ix_(*([self.nodes()] * self.d))

    def check_box(self, box: LatticeBox) -> None:
        if box.d != self.d:
            raise ConfigError("grid and box dimensions differ")
        if self.N < 2 * box.L + 1:
            raise AliasingError(f"N={self.N} < 2L+1={2 * box.L + 1}: box would alias on the torus")

    @classmethod
    def for_box(cls, box: LatticeBox, pad: int = 0) -> "DualGrid":
        """Smallest even grid holding ``box`` plus ``pad`` extra sites per side."""
        n = 2 * (box.L + pad) + 1
        return cls(box.d, n + (n % 2))


def lp_norm(f: LatticeFunction | np.ndarray, p: float) -> float:
    """Counting-measure ``l^p`` norm, ``p`` in ``[1, inf]``."""
    a = np.abs(_vals(f)).ravel()
    if not p >= 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    if np.isinf(p):
        return float(a.max(initial=0.0))
    m = a.max(initial=0.0)
    if m == 0:
        return 0.0
    # rescale to avoid overflow for large p
    return float(m * np.sum((a / m) ** p) ** (1.0 / p))


def besov_shells(box: LatticeBox) -> list[np.ndarray]:
    """Boolean masks of the shells ``2^(j-1) <= |x| < 2^j``, j = 1, 2, ..."""
    r = box.radius()
    shells = []
    j = 1
    while 2.0 ** (j - 1) <= r.max():
        shells.append((r >= 2.0 ** (j - 1)) & (r < 2.0**j))
        j += 1
    return shells


def besov_norm(f: LatticeFunction, variant: str = "B") -> float:
    """Dyadic-shell norms ``B`` and ``B*``.

    ``B``  = ||f||_{L^2(|x|<=1)} + sum_j 2^{j/2} ||f||_{L^2(shell j)}
    ``B*`` = ||f||_{L^2(|x|<=1)} + sup_j 2^{-j/2} ||f||_{L^2(shell j)}

    Shells are ``2^(j-1) <= |x| < 2^j``; sites with ``|x| = 1`` belong to
    both the unit ball term and shell 1, exactly as the definition reads.
    """
    v = f.values
    r = f.box.radius()
    core = np.linalg.norm(v[r <= 1])
    norms = np.array([np.linalg.norm(v[m]) for m in besov_shells(f.box)])
    j = np.arange(1, norms.size + 1)
    if variant == "B":
        return float(core + np.sum(2.0 ** (j / 2) * norms))
    if variant in ("Bstar", "B*"):
        return float(core + np.max(2.0 ** (-j / 2) * norms, initial=0.0))
    raise ConfigError(f"unknown Besov variant {variant!r}")


def to_torus(f: LatticeFunction, grid: DualGrid) -> np.ndarray:
    """Periodic embedding of the box values into ``Z_N^d``."""
    grid.check_box(f.box)
    u = np.zeros(grid.shape, complex)
    idx = np.arange(-f.box.L, f.box.L + 1) % grid.N
    u[np.ix_(*([idx] * f.box.d))] = f.values
    return u


def from_torus(u: np.ndarray, box: LatticeBox) -> LatticeFunction:
    """Read the box back off a periodic array."""
    N = u.shape[0]
    if N < 2 * box.L + 1:
        raise AliasingError("torus smaller than the box")
    idx = np.arange(-box.L, box.L + 1) % N
    return LatticeFunction(box, u[np.ix_(*([idx] * box.d))])


def dft(f: LatticeFunction, grid: DualGrid) -> np.ndarray:
    """``f^(j/N) = sum_x f(x) exp(-2 pi i x.j/N)`` on the grid."""
    return sfft.fftn(to_torus(f, grid))


def idft(fhat: np.ndarray, grid: DualGrid, box: LatticeBox) -> LatticeFunction:
    """Inverse of :func:`dft`, restricted to ``box``."""
    grid.check_box(box)
    return from_torus(sfft.ifftn(fhat), box)


def h0_stencil(u: np.ndarray) -> np.ndarray:
    """Periodic stencil ``sum_{|x-y|=1} (u(x) - u(y))`` (symbol h0 >= 0)."""
    out = 2 * u.ndim * u
    for ax in range(u.ndim):
        out = out - np.roll(u, 1, axis=ax) - np.roll(u, -1, axis=ax)
    return out
