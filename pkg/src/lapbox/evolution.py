"""Free and perturbed time evolution on a periodic computational box.

The free flow is diagonal in Fourier space, exp(-i t h0(xi)).  The
perturbed flow exp(-i t H), H = H0 + V, uses a Chebyshev expansion

    exp(-i t H) = exp(-i t c) sum_k (2 - delta_k0) (-i)^k J_k(tau) T_k(Hn),

with c, tau the centre and half-width of the spectral interval scaled by
t and Hn the operator mapped to [-1, 1].  Truncating after n terms leaves
an error below 2 (tau/2)^n / n! / (1 - tau/(2(n+1))).

Both flows run on a torus Z_N^d.  A state supported in |x|_inf <= R
stays wrap-free up to tail |J_n(2t)| for n > 2|t| because the group speed
per axis is at most 2; the budget is N/2 >= R + 2|t| + margin.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import fft as sfft
from scipy import special

from .errors import BudgetError, ConfigError, SpectralIntervalError
from .fitting import DecayFit, fit_power_law
from .lattice import DualGrid, LatticeBox, LatticeFunction, from_torus, h0_stencil, to_torus
from .potential import Potential

__all__ = [
    "ChebyshevSpec",
    "PropagatorSpec",
    "free_kernel_1d",
    "wrap_margin",
    "budget_half_width",
    "grid_for",
    "free_propagate",
    "free_propagate_torus",
    "dispersive_decay_fit",
    "chebyshev_tail_bound",
    "chebyshev_propagate",
    "perturbed_propagate",
    "hamiltonian",
    "check_interval",
]

DEFAULT_MARGIN = 8


def free_kernel_1d(t: float, x) -> np.ndarray:
    """``(exp(-i t H0) delta_0)(x) = exp(-2it) i^|x| J_|x|(2t)`` in d = 1."""
    n = np.abs(np.asarray(x))
    return np.exp(-2j * t) * (1j ** (n % 4)) * special.jv(n, 2 * t)


def wrap_margin(t: float, tol: float | None = None, minimum: int = DEFAULT_MARGIN) -> int:
    """Sites beyond ``2|t|`` needed so the kernel tail is below ``tol``.

    ``tol=None`` returns the fixed ``minimum``.
    """
    if tol is None:
        return minimum
    n0 = int(np.ceil(2 * abs(t)))
    m = minimum
    while abs(special.jv(n0 + m, 2 * abs(t))) >= tol:
        m += 4
    return m


def budget_half_width(extent: int, t: float, margin: int = DEFAULT_MARGIN) -> int:
    return int(extent + np.ceil(2 * abs(t)) + margin)


def grid_for(d: int, extent: int, t: float, margin: int = DEFAULT_MARGIN) -> DualGrid:
    """Smallest FFT-friendly even grid meeting the wraparound budget."""
    need = 2 * budget_half_width(extent, t, margin) + 2
    N = sfft.next_fast_len(need)
    return DualGrid(d, N + (N % 2))


def _extent(f: LatticeFunction, cut: float = 0.0) -> int:
    nz = np.argwhere(np.abs(f.values) > cut)
    return int(np.abs(nz - f.box.L).max(initial=0))


def _check_budget(grid: DualGrid, extent: int, t: float, margin: int):
    if grid.N // 2 - 1 < budget_half_width(extent, t, margin):
        raise BudgetError(
            f"torus half-width {grid.N // 2 - 1} < extent {extent} + 2|t| ({2 * abs(t):g}) + margin {margin}"
        )


def _symbol_on_grid(d: int, N: int) -> np.ndarray:
    h1 = 4 * np.sin(np.pi * np.arange(N) / N) ** 2
    return sum(h1.reshape([N if j == a else 1 for j in range(d)]) for a in range(d))


def free_propagate_torus(u: np.ndarray, t: float) -> np.ndarray:
    h = _symbol_on_grid(u.ndim, u.shape[0])
    return sfft.ifftn(np.exp(-1j * t * h) * sfft.fftn(u))


def free_propagate(d: int, t: float, psi0: LatticeFunction, grid: DualGrid | None = None,
                   out_box: LatticeBox | None = None, margin: int = DEFAULT_MARGIN) -> LatticeFunction:
    """``exp(-i t H0) psi0`` read back on ``out_box`` (default: ``psi0.box``)."""
    ext = _extent(psi0)
    grid = grid or grid_for(d, ext, t, margin)
    _check_budget(grid, ext, t, margin)
    out_box = out_box or psi0.box
    grid.check_box(out_box)
    return from_torus(free_propagate_torus(to_torus(psi0, grid), t), out_box)


def dispersive_decay_fit(d: int, t_window=(20.0, 200.0), n_samples: int = 24,
                         grid_factor: int = 1, max_residual: float = 0.2) -> DecayFit:
    """Fit ``sup_x |exp(-i t H0) delta_0| ~ t^(-a)``.

    Samples are log-spaced over ``t_window``; each uses the smallest
    budget-compliant torus times ``grid_factor``.
    """
    ts = np.geomspace(t_window[0], t_window[1], n_samples)
    sup = np.empty_like(ts)
    for i, t in enumerate(ts):
        g = grid_for(d, 0, t)
        N = g.N * grid_factor
        u = np.zeros((N,) * d, complex)
        u[(0,) * d] = 1.0
        sup[i] = np.abs(free_propagate_torus(u, t)).max()
    return fit_power_law(ts, sup, max_residual=max_residual)


# ---------------------------------------------------------------- Chebyshev

def chebyshev_tail_bound(tau: float, n: int) -> float:
    """Bound on ``sum_{k>=n} 2|J_k(tau)|``; ``inf`` if ``n + 1 <= tau/2``."""
    tau = abs(tau)
    if tau == 0:
        return 0.0 if n >= 1 else 2.0
    q = tau / (2 * (n + 1))
    if q >= 1:
        return np.inf
    logb = np.log(2.0) + n * np.log(tau / 2) - special.gammaln(n + 1)
    return float(np.exp(logb) / (1 - q))


@dataclass(frozen=True)
class ChebyshevSpec:
    """Chebyshev expansion parameters for one propagation of length ``t``."""

    spectral_interval: tuple
    n_terms: int
    tail_bound: float
    t: float = 0.0

    def __post_init__(self):
        a, b = self.spectral_interval
        if not b > a:
            raise ConfigError("spectral interval must have b > a")

    @classmethod
    def build(cls, t: float, interval, tol: float = 1e-12) -> "ChebyshevSpec":
        a, b = map(float, interval)
        tau = abs(t) * (b - a) / 2
        n = max(1, int(np.ceil(tau / 2)))
        while chebyshev_tail_bound(tau, n) > tol:
            n += 1
        return cls((a, b), n, chebyshev_tail_bound(tau, n), t)

    @classmethod
    def for_potential(cls, d: int, V: Potential, t: float, tol: float = 1e-12, pad: float = 1e-3):
        a, b = gershgorin_interval(d, V)
        return cls.build(t, (a - pad, b + pad), tol)

    def contains(self, d: int, V: Potential) -> bool:
        a, b = gershgorin_interval(d, V)
        return self.spectral_interval[0] <= a and self.spectral_interval[1] >= b


@dataclass(frozen=True)
class PropagatorSpec:
    """Bundle of a dimension, a time and the discretization used for it."""

    d: int
    t: float
    grid: DualGrid | None = None
    cheb: ChebyshevSpec | None = None

    def __post_init__(self):
        if not np.isfinite(self.t):
            raise ConfigError("t must be finite")


def gershgorin_interval(d: int, V: Potential) -> tuple:
    vmin = min(0.0, float(V.values.min(initial=0.0)))
    vmax = max(0.0, float(V.values.max(initial=0.0)))
    return (vmin, 4.0 * d + vmax)


def hamiltonian(V_torus: np.ndarray | None) -> Callable:
    if V_torus is None:
        return h0_stencil
    return lambda u: h0_stencil(u) + V_torus * u


def chebyshev_propagate(apply_H: Callable, u: np.ndarray, t: float, spec: ChebyshevSpec) -> np.ndarray:
    """``exp(-i t H) u`` with the three-term recurrence.

    ``spec`` must have been built for ``|t|`` (its ``n_terms`` are reused).
    """
    a, b = spec.spectral_interval
    c, r = (a + b) / 2, (b - a) / 2
    tau = t * r
    n = spec.n_terms
    coef = (2.0 - (np.arange(n) == 0)) * (-1j) ** np.arange(n) * special.jv(np.arange(n), tau)
    Hn = lambda v: (apply_H(v) - c * v) / r
    T0 = u
    acc = coef[0] * T0
    if n > 1:
        T1 = Hn(u)
        acc = acc + coef[1] * T1
        for k in range(2, n):
            T0, T1 = T1, 2 * Hn(T1) - T0
            acc = acc + coef[k] * T1
    return np.exp(-1j * t * c) * acc


def check_interval(apply_H: Callable, shape, interval, rng: np.random.Generator,
                   n_iter: int = 40, slack: float = 1e-10) -> tuple:
    """Rayleigh-quotient probe of the spectrum against ``interval``.

    Power iteration on ``H - a`` and ``b - H`` drives Rayleigh quotients
    toward the extreme eigenvalues; any quotient outside ``[a, b]`` is a
    certificate that the interval misses part of the spectrum.
    """
    a, b = interval
    m = (a + b) / 2
    lo, hi = np.inf, -np.inf
    for shift_sign in (1, -1):
        v = rng.standard_normal(shape) + 0j
        v /= np.linalg.norm(v)
        for _ in range(n_iter):
            Hv = apply_H(v)
            rq = float(np.vdot(v, Hv).real)
            lo, hi = min(lo, rq), max(hi, rq)
            w = shift_sign * (Hv - m * v) + (b - a) * v
            v = w / np.linalg.norm(w)
    if lo < a - slack or hi > b + slack:
        raise SpectralIntervalError(f"Rayleigh quotients span [{lo:.6g}, {hi:.6g}] outside [{a}, {b}]")
    return lo, hi


def perturbed_propagate(d: int, V: Potential, t: float, psi0: LatticeFunction,
                        cheb: ChebyshevSpec | None = None, grid: DualGrid | None = None,
                        out_box: LatticeBox | None = None, tol: float = 1e-12,
                        margin: int = DEFAULT_MARGIN, probe_seed: int | None = 0) -> LatticeFunction:
    """``exp(-i t H) psi0`` for ``H = H0 + V`` on a periodic box.

    ``cheb`` defaults to an expansion over the Gershgorin interval with
    certified tail ``tol``.  A supplied ``cheb`` with tail above ``tol``
    is rejected, and its interval is probed by Rayleigh quotients unless
    ``probe_seed`` is None.
    """
    ext = max(_extent(psi0), V.extent())
    grid = grid or grid_for(d, ext, t, margin)
    _check_budget(grid, ext, t, margin)
    if cheb is None:
        cheb = ChebyshevSpec.for_potential(d, V, t, tol)
    elif cheb.tail_bound > tol:
        raise ConfigError(f"Chebyshev tail bound {cheb.tail_bound:.3g} exceeds tolerance {tol:.3g}")
    Vt = V.on_torus(grid.N) if V.size else None
    H = hamiltonian(Vt)
    if probe_seed is not None:
        check_interval(H, grid.shape, cheb.spectral_interval, np.random.default_rng(probe_seed))
    if abs(cheb.t) < abs(t) - 1e-15:
        raise ConfigError("Chebyshev spec was built for a shorter time")
    out_box = out_box or psi0.box
    u = chebyshev_propagate(H, to_torus(psi0, grid), t, cheb)
    return from_torus(u, out_box)
