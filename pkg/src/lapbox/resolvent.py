"""The free resolvent R0(z) = (H0 - z)^{-1} on Z^d.

``green_kernel`` is the tensor trapezoid rule on the torus, which for
Im z > 0 is an exponentially convergent quadrature of

    G(x; z) = int_{T^d} exp(2 pi i x.xi) / (h0(xi) - z) dxi.

``limiting_absorption`` reaches z = lambda +- i0 by Richardson
extrapolation in eps.  ``kernel_decay_fit`` measures the power-law decay
of the boundary value along a lattice ray; by default it evaluates the
boundary value with the contour route of :mod:`lapbox.greens`, since the
eps-extrapolation needs N >> |x|/eps grid points per axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from . import greens
from .errors import ConfigError, DivergenceError, MeshConditionError
from .fitting import DecayFit, fit_power_law
from .lattice import DualGrid, LatticeBox, LatticeFunction, from_torus, to_torus
from .symbols import distance_to_critical

__all__ = [
    "SpectralPoint",
    "QuadratureSpec",
    "GreenKernel",
    "LimitValue",
    "green_kernel",
    "green_kernel_box",
    "limiting_absorption",
    "richardson",
    "resolvent_apply",
    "resolvent_torus",
    "kernel_decay_fit",
    "ray_points",
]


@dataclass(frozen=True)
class SpectralPoint:
    """``z = lam + sign * i * eps``."""

    lam: float
    eps: float = 0.0
    sign: int = 1

    def __post_init__(self):
        if self.eps < 0:
            raise ConfigError("eps must be nonnegative")
        if self.sign not in (1, -1):
            raise ConfigError("sign must be +1 or -1")

    @property
    def z(self) -> complex:
        return complex(self.lam, self.sign * self.eps)

    def conj(self) -> "SpectralPoint":
        return SpectralPoint(self.lam, self.eps, -self.sign)

    def distance_to_spectrum(self, d: int) -> float:
        dr = max(0.0, -self.lam, self.lam - 4 * d)
        return float(np.hypot(dr, self.eps))


@dataclass(frozen=True)
class QuadratureSpec:
    """Trapezoid grid and eps schedule for the limiting absorption."""

    N: int = 1 << 17
    eps_schedule: tuple = (2e-3, 1e-3, 5e-4)
    richardson_order: int = 2
    mesh_c: float = 32.0

    def __post_init__(self):
        object.__setattr__(self, "eps_schedule", tuple(float(e) for e in self.eps_schedule))
        if self.N < 2 or self.N % 2:
            raise ConfigError(f"N must be even, got {self.N}")
        e = np.asarray(self.eps_schedule)
        if e.size and (np.any(e <= 0) or np.any(np.diff(e) >= 0)):
            raise ConfigError("eps_schedule must be positive and strictly decreasing")
        if self.richardson_order < 1:
            raise ConfigError("richardson_order must be >= 1")
        if e.size and self.N < self.mesh_c / e[-1]:
            raise MeshConditionError(
                f"N={self.N} violates N >= {self.mesh_c}/eps_min = {self.mesh_c / e[-1]:.0f}"
            )

    def mesh_ok(self, scale: float) -> bool:
        return self.N >= self.mesh_c / scale


@dataclass(frozen=True, eq=False)
class GreenKernel:
    """Values of ``G(x; z)`` on a box with provenance."""

    d: int
    z: SpectralPoint
    box: LatticeBox
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.values[tuple(np.asarray(x) + self.box.L)]

    def as_function(self) -> LatticeFunction:
        return LatticeFunction(self.box, self.values)


@dataclass(frozen=True)
class LimitValue:
    """An extrapolated boundary value with its residual estimate."""

    value: complex
    residual: float
    diverged: bool
    samples: tuple = ()


def _trap_scale(d, z: SpectralPoint):
    s = z.distance_to_spectrum(d)
    if s == 0:
        raise ConfigError("eps = 0 inside the spectrum: use limiting_absorption")
    return s


def green_kernel(d: int, x, z: SpectralPoint, quad: QuadratureSpec, return_error: bool = False):
    """Trapezoid-rule value of ``G(x; z)``.

    The error estimate is the change against the half-size grid, a
    conservative bound for the geometrically convergent rule.
    """
    scale = _trap_scale(d, z)
    if not quad.mesh_ok(scale):
        raise MeshConditionError(f"N={quad.N} too coarse for distance {scale:g} to the spectrum")
    x = np.reshape(np.asarray(x, dtype=np.int64), (1, d))
    val = complex(greens.green_trapezoid(d, x, z.z, quad.N)[0])
    if z.eps == 0:
        val = complex(val.real, 0.0)
    if not return_error:
        return val
    coarse = complex(greens.green_trapezoid(d, x, z.z, quad.N // 2)[0])
    return val, abs(val - coarse)


def richardson(values, ratio: float, order: int):
    """Richardson table for samples at ``h, h/ratio, h/ratio^2, ...``.

    Returns ``(extrapolated, last_increment)`` assuming an error expansion
    in integer powers of ``h``.
    """
    v = np.asarray(values, complex)
    n = v.size
    if n < 2:
        raise ConfigError("need at least two samples")
    order = min(order, n - 1)
    T = [v.copy()]
    for j in range(1, order + 1):
        f = ratio**j
        prev = T[-1]
        T.append((f * prev[1:] - prev[:-1]) / (f - 1))
    best = T[order][-1]
    inc = abs(best - T[order - 1][-1])
    return complex(best), float(inc)


def limiting_absorption(d: int, x, lam: float, sign: int, quad: QuadratureSpec, strict: bool = False) -> LimitValue:
    """Boundary value ``G(x; lam + sign*i0)`` by eps-extrapolation.

    The samples ``G(x; lam + sign*i*eps_k)`` come from
    :func:`green_kernel`; the schedule must be geometric.  The value is
    flagged as diverged when successive raw increments do not shrink,
    the behaviour expected at the critical values 4k.
    """
    if not 0 < lam < 4 * d:
        raise ConfigError(f"lambda = {lam} must lie in (0, {4 * d})")
    e = np.asarray(quad.eps_schedule)
    if e.size < 2:
        raise ConfigError("eps_schedule needs at least two entries")
    ratios = e[:-1] / e[1:]
    if not np.allclose(ratios, ratios[0], rtol=1e-12):
        raise ConfigError("eps_schedule must be geometric")
    vals = [green_kernel(d, x, SpectralPoint(lam, float(ep), sign), quad) for ep in e]
    best, inc = richardson(vals, ratios[0], quad.richardson_order)
    raw = np.abs(np.diff(vals))
    diverged = bool(raw.size > 1 and np.any(raw[1:] >= raw[:-1]))
    if strict and diverged:
        raise DivergenceError(f"eps-extrapolation increments do not decrease at lambda = {lam}")
    return LimitValue(best, inc, diverged, tuple(vals))


def green_kernel_box(d: int, L: int, z: SpectralPoint, method: str = "auto", N: int | None = None) -> GreenKernel:
    """Tabulate ``G(.; z)`` on ``{-L..L}^d``.

    ``method='contour'`` handles eps >= 0 (including the boundary value),
    ``'laplace'`` real z off the spectrum and ``'trapezoid'`` eps > 0 with
    an explicit grid ``N >= 4L + 1``.
    """
    vals = greens.green_box_values(d, L, z.lam, z.eps, z.sign, method, N)
    return GreenKernel(d, z, LatticeBox(d, L), vals, {"method": method, "N": N})


def resolvent_torus(u: np.ndarray, z: complex) -> np.ndarray:
    """Apply ``(h0(D) - z)^{-1}`` to a periodic array."""
    d = u.ndim
    N = u.shape[0]
    h1 = 4 * np.sin(np.pi * np.arange(N) / N) ** 2
    h = sum(h1.reshape([N if j == a else 1 for j in range(d)]) for a in range(d))
    return sfft.ifftn(sfft.fftn(u) / (h - z))


def resolvent_apply(d: int, z: SpectralPoint, f: LatticeFunction, grid: DualGrid, out_box: LatticeBox | None = None) -> LatticeFunction:
    """``R0(z) f`` on the torus of ``grid``, read back on ``out_box``.

    The result is the exact periodic resolvent; it agrees with the
    lattice resolvent up to wrap-around of the kernel tail.
    """
    if z.distance_to_spectrum(d) == 0:
        raise ConfigError("resolvent_apply needs z off the spectrum (eps > 0)")
    grid.check_box(f.box)
    out_box = out_box or f.box
    grid.check_box(out_box)
    return from_torus(resolvent_torus(to_torus(f, grid), z.z), out_box)


def ray_points(direction, window) -> np.ndarray:
    """Lattice points ``n * direction`` with Euclidean norm inside ``window``."""
    v = np.asarray(direction, dtype=np.int64)
    if not np.any(v):
        raise ConfigError("direction must be nonzero")
    nv = np.linalg.norm(v)
    n = np.arange(int(np.ceil(window[0] / nv - 1e-12)), int(np.floor(window[1] / nv + 1e-12)) + 1)
    if n.size < 2:
        raise ConfigError("decay window holds fewer than two ray points")
    return n[:, None] * v[None, :]


def kernel_decay_fit(
    d: int,
    lam: float,
    sign: int = 1,
    direction=None,
    window=(8, 64),
    quad: QuadratureSpec | None = None,
    method: str = "contour",
    margin: float = 0.25,
    max_residual: float = 0.1,
) -> DecayFit:
    """Fit ``|G(x; lam + sign*i0)| ~ C |x|^(-k)`` along a lattice ray.

    ``method='extrapolate'`` evaluates each point with
    :func:`limiting_absorption` and ``quad`` (practical in d = 1 only);
    ``'contour'`` uses the contour route.  Energies off the spectrum use
    the real resolvent.  Raises :class:`FitRejected` when the log-log
    residual exceeds ``max_residual``.
    """
    direction = (1,) + (0,) * (d - 1) if direction is None else tuple(direction)
    if len(direction) != d:
        raise ConfigError("direction has the wrong dimension")
    inside = 0 <= lam <= 4 * d
    if inside and distance_to_critical(d, lam) < margin:
        raise ConfigError(f"lambda = {lam} within {margin} of a critical value")
    pts = ray_points(direction, window)
    if not inside:
        vals = greens.green_points(d, pts, lam, 0.0, sign, "auto")
    elif method == "extrapolate":
        if quad is None:
            raise ConfigError("extrapolate method needs a QuadratureSpec")
        vals = np.array([limiting_absorption(d, p, lam, sign, quad).value for p in pts])
    else:
        vals = greens.green_points(d, pts, lam, 0.0, sign, method)
    r = np.linalg.norm(pts, axis=1)
    return fit_power_law(r, vals, max_residual=max_residual)
