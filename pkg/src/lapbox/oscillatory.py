"""Level sets of h0 as graphs, Fourier transforms of their surface measure, and gamma integrals.

On a patch where d h0/d xi_j != 0 the level set {h0 = lam} is a graph
xi_j = h_lam(xi'), and

    h0(xi) - lam = e(xi, lam) (xi_j - h_lam(xi')),
    e(xi, lam) = int_0^1 (d_j h0)(xi', t xi_j + (1 - t) h_lam(xi')) dt.

The gamma integrals are the one-dimensional oscillatory integrals

    gamma_z(x_d) = int e^{2 pi i x_d s} chi(s) / (s - i Im(z) b(s)) ds,

with the boundary value read as int f/(s -+ i0) = p.v. int f/s +- i pi f(0).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np
from scipy import special

from .errors import ChartRejected, ConfigError, QuadratureError
from .fitting import DecayFit, fit_power_law
from .resolvent import SpectralPoint
from .symbols import h0_eval, h0_grad

__all__ = [
    "Patch",
    "GraphChart",
    "graph_chart",
    "surface_ft",
    "surface_decay_fit",
    "bump",
    "level_set_partition",
    "coarea_imag_green",
    "smoothstep",
    "CutoffProfile",
    "GammaSpec",
    "gamma_integral",
    "pv_integral",
    "pv_fourier_identity",
    "gamma_bounds_scan",
]

_GL_T, _GL_W = np.polynomial.legendre.leggauss(16)


# ---------------------------------------------------------------- patches and charts

@dataclass(frozen=True)
class Patch:
    """Tensor quadrature on a box ``center +- half_width`` in the base torus.

    ``rule='gauss'`` uses ``n`` Gauss-Legendre nodes per axis split over
    ``panels`` panels; ``'trapezoid'`` uses ``n`` equispaced periodic nodes
    (meant for ``half_width = 1/2``, the whole torus).
    """

    center: tuple
    half_width: float
    n: int = 32
    rule: str = "gauss"
    panels: int = 1

    def __post_init__(self):
        if self.rule not in ("gauss", "trapezoid"):
            raise ConfigError(f"unknown rule {self.rule!r}")
        if self.half_width <= 0 or self.half_width > 0.5:
            raise ConfigError("half_width must lie in (0, 1/2]")

    @property
    def dim(self) -> int:
        return len(self.center)

    def nodes_1d(self):
        h = self.half_width
        if self.rule == "trapezoid":
            t = -h + 2 * h * (np.arange(self.n) + 0.5) / self.n
            return t, np.full(self.n, 2 * h / self.n)
        t, w = np.polynomial.legendre.leggauss(self.n)
        edges = np.linspace(-h, h, self.panels + 1)
        xs, ws = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            xs.append((a + b) / 2 + (b - a) / 2 * t)
            ws.append((b - a) / 2 * w)
        return np.concatenate(xs), np.concatenate(ws)

    def nodes(self):
        t, w = self.nodes_1d()
        k = self.dim
        if k == 0:
            return np.zeros((1, 0)), np.ones(1)
        P = np.stack(np.meshgrid(*([t] * k), indexing="ij"), axis=-1).reshape(-1, k)
        W = np.prod(np.stack(np.meshgrid(*([w] * k), indexing="ij"), axis=-1).reshape(-1, k), axis=1)
        return P + np.asarray(self.center, float), W


def _insert(base, axis, val):
    return np.insert(base, axis, val, axis=1)


def _h0_partial(d, xi_full, axis):
    return h0_grad(d, xi_full)[..., axis]


@dataclass(frozen=True, eq=False)
class GraphChart:
    """``xi_axis = h_lam(xi')`` on the nodes of a patch (masked nodes excluded)."""

    d: int
    lam: float
    patch: Patch
    axis: int
    branch: int
    base: np.ndarray
    weights: np.ndarray
    h: np.ndarray
    mask: np.ndarray
    min_slope: float
    residual: float

    @property
    def points(self) -> np.ndarray:
        """Graph points on the level set (masked nodes only)."""
        return _insert(self.base[self.mask], self.axis, self.h[self.mask])

    def grad_h(self) -> np.ndarray:
        g = h0_grad(self.d, self.points)
        return -np.delete(g, self.axis, axis=1) / g[:, [self.axis]]

    def e(self, xi_axis, idx=None) -> np.ndarray:
        """``e(xi, lam)`` at ``(xi', xi_axis)`` for the masked base nodes (or ``idx`` among them)."""
        base = self.base[self.mask]
        hh = self.h[self.mask]
        if idx is not None:
            base, hh = base[idx], hh[idx]
        xa = np.broadcast_to(np.asarray(xi_axis, float), hh.shape)
        s = (_GL_T + 1) / 2
        acc = np.zeros(hh.shape)
        for sk, wk in zip(s, _GL_W / 2):
            acc += wk * _h0_partial(self.d, _insert(base, self.axis, sk * xa + (1 - sk) * hh), self.axis)
        return acc


def graph_chart(d: int, lam: float, patch: Patch, branch: int = 1, axis: int | None = None,
                allow_partial: bool = False, min_slope: float = 1e-8) -> GraphChart:
    """Solve ``4 sin^2(pi xi_axis) = lam - h0'(xi')`` on the patch nodes.

    ``branch=+1`` is the sheet ``xi_axis in (0, 1/2)`` where
    ``d h0/d xi_axis > 0``; ``-1`` its mirror image.  Nodes where the
    equation has no solution, or where the slope is below ``min_slope``,
    reject the patch unless ``allow_partial`` (then they are masked out).
    """
    axis = d - 1 if axis is None else axis
    if patch.dim != d - 1:
        raise ConfigError("patch dimension must be d - 1")
    if branch not in (1, -1):
        raise ConfigError("branch must be +1 or -1")
    base, w = patch.nodes()
    mu = lam - (h0_eval(d - 1, base) if d > 1 else 0.0)
    arg = np.sqrt(np.clip(mu, 0, None)) / 2
    ok = (mu >= 0) & (arg <= 1)
    h = branch * np.arcsin(np.clip(arg, 0, 1)) / np.pi
    slope = np.abs(4 * np.pi * np.sin(2 * np.pi * h))
    ok &= slope > min_slope
    if not allow_partial and not np.all(ok):
        raise ChartRejected(f"level set lam = {lam} leaves the graph regime on the patch")
    if not np.any(ok):
        raise ChartRejected("no patch node lies on the level set")
    full = _insert(base[ok], axis, h[ok])
    res = float(np.abs(h0_eval(d, full) - lam).max())
    return GraphChart(d, float(lam), patch, axis, branch, base, w, h, ok, float(slope[ok].min()), res)


def bump(center, radius: float, order: int = 2):
    """Radial cutoff ``1 - smoothstep(|xi - center| / radius)`` on the torus."""
    c = np.asarray(center, float)

    def f(xi):
        r = np.linalg.norm((np.asarray(xi) - c + 0.5) % 1.0 - 0.5, axis=-1) / radius
        return 1.0 - smoothstep(r, order)

    return f


def surface_ft(chart: GraphChart, chi: Callable, x, density: Callable | None = None) -> complex:
    """``int e^{2 pi i x.xi} chi(xi) density(xi) dsigma(xi)`` over the chart.

    ``dsigma = sqrt(1 + |grad h|^2) dxi'`` in graph coordinates; ``chi`` and
    ``density`` take full points ``xi`` (shape ``(n, d)``).
    """
    P = chart.points
    w = chart.weights[chart.mask] * np.sqrt(1 + np.sum(chart.grad_h() ** 2, axis=1))
    val = np.asarray(chi(P), float) * w
    if density is not None:
        val = val * density(P)
    x = np.asarray(x, float).reshape(-1, chart.d)
    return np.exp(2j * np.pi * x @ P.T) @ val if x.shape[0] > 1 else complex(np.exp(2j * np.pi * P @ x[0]) @ val)


def surface_decay_fit(chart: GraphChart, chi: Callable, direction, window=(8, 64), n_samples: int = 16,
                      max_residual: float = 0.15) -> DecayFit:
    """Fit ``|surface_ft(x)| ~ |x|^(-k)`` at lattice points nearest the ray ``r * direction``."""
    u = np.asarray(direction, float)
    u = u / np.linalg.norm(u)
    rs = np.geomspace(window[0], window[1], n_samples)
    X = np.unique(np.rint(rs[:, None] * u[None, :]).astype(int), axis=0)
    r = np.linalg.norm(X, axis=1)
    vals = np.abs(surface_ft(chart, chi, X))
    return fit_power_law(r, vals, max_residual=max_residual)


def level_set_partition(d: int, m: int = 6):
    """Weights ``w_j = |d_j h0|^m / sum_k |d_k h0|^m`` (a partition of unity on regular level sets)."""

    def weight(axis):
        def f(xi):
            g = np.abs(h0_grad(d, xi)) ** m
            return g[..., axis] / g.sum(axis=-1)

        return f

    return [weight(j) for j in range(d)]


def coarea_imag_green(d: int, lam: float, xs, n: int = 256, m: int = 6) -> np.ndarray:
    """``pi int_{h0 = lam} cos(2 pi x.xi) dsigma / |grad h0|`` from graph charts.

    Charts over every axis and both sheets on the whole base torus,
    glued by :func:`level_set_partition`; the sum equals
    ``Im G(x; lam + i0)``.
    """
    xs = np.asarray(xs, float).reshape(-1, d)
    weights = level_set_partition(d, m)
    inv_grad = lambda P: 1.0 / np.linalg.norm(h0_grad(d, P), axis=1)
    patch = Patch((0.0,) * (d - 1), 0.5, n, "trapezoid")
    total = np.zeros(len(xs), complex)
    for axis in range(d):
        for br in (1, -1):
            ch = graph_chart(d, lam, patch, br, axis, allow_partial=True)
            total += np.atleast_1d(surface_ft(ch, weights[axis], xs if len(xs) > 1 else xs[0], inv_grad))
    return np.pi * total.real


# ---------------------------------------------------------------- gamma integrals

def smoothstep(t, order: int = 2):
    """``C^order`` smoothstep: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.clip(np.asarray(t, float), 0.0, 1.0)
    n = order
    s = np.zeros_like(t)
    for k in range(n + 1):
        s += comb(n + k, k) * comb(2 * n + 1, n - k) * (-t) ** k
    return t ** (n + 1) * s


@dataclass(frozen=True)
class CutoffProfile:
    """Even cutoff: 1 on ``|s| <= plateau``, 0 on ``|s| >= support``, ``C^order`` between."""

    plateau: float = 0.1
    support: float = 0.2
    order: int = 2

    def __post_init__(self):
        if not 0 < self.plateau < self.support:
            raise ConfigError("need 0 < plateau < support")

    def __call__(self, s):
        return 1.0 - smoothstep((np.abs(s) - self.plateau) / (self.support - self.plateau), self.order)


def default_b(s):
    return 1.0 + 0.3 * np.asarray(s, float) ** 2


@dataclass(frozen=True)
class GammaSpec:
    """One gamma integral: profiles, spectral point and quadrature controls."""

    chi: CutoffProfile = field(default_factory=CutoffProfile)
    b: Callable = default_b
    z: SpectralPoint = field(default_factory=lambda: SpectralPoint(1.0, 0.0, 1))
    x_d: float = 0.0
    n_gl: int = 20
    refine: int = 1
    grading: float = 2.0

    def __post_init__(self):
        s = np.linspace(-self.chi.support, self.chi.support, 201)
        if np.any(np.asarray(self.b(s)) <= 0):
            raise ConfigError("b must be positive on the support of chi")
        if self.refine < 1 or self.grading <= 1:
            raise ConfigError("refine >= 1 and grading > 1 required")

    def with_(self, **kw) -> "GammaSpec":
        d = dict(chi=self.chi, b=self.b, z=self.z, x_d=self.x_d, n_gl=self.n_gl,
                 refine=self.refine, grading=self.grading)
        d.update(kw)
        return GammaSpec(**d)


def _breakpoints(spec: GammaSpec, eps: float) -> np.ndarray:
    S, P = spec.chi.support, spec.chi.plateau
    pts = [0.0, P, S]
    if eps > 0:
        a = eps / 64
        while a < S:
            pts.append(a)
            a *= spec.grading
    # oscillation: at most a quarter wave per panel
    n_osc = int(np.ceil(4 * abs(spec.x_d) * S)) + 1
    pts += list(np.linspace(0, S, n_osc + 1))
    pts = np.unique(np.clip(pts, 0, S))
    if spec.refine > 1:
        sub = [np.linspace(a, b, spec.refine + 1)[:-1] for a, b in zip(pts[:-1], pts[1:])]
        pts = np.r_[np.concatenate(sub), S]
    return pts


def _panel_rule(pts, n):
    t, w = np.polynomial.legendre.leggauss(n)
    a, b = pts[:-1, None], pts[1:, None]
    return ((a + b) / 2 + (b - a) / 2 * t).ravel(), ((b - a) / 2 * w).ravel()


def pv_integral(f: Callable, r: float, pts=None, n: int = 20) -> complex:
    """``p.v. int_{-r}^{r} f(s)/s ds`` as ``int_0^r (f(s) - f(-s))/s ds``."""
    pts = np.array([0.0, r]) if pts is None else np.asarray(pts, float)
    s, w = _panel_rule(pts, n)
    return complex(np.sum(w * (f(s) - f(-s)) / s))


def gamma_integral(spec: GammaSpec) -> complex:
    """``gamma_z(x_d)`` for ``eps = |Im z| >= 0`` and the side ``spec.z.sign``."""
    eps, sg = spec.z.eps, spec.z.sign
    S = spec.chi.support
    pts = _breakpoints(spec, eps)
    f = lambda s: np.exp(2j * np.pi * spec.x_d * s) * spec.chi(s)
    if eps == 0:
        return pv_integral(f, S, pts, spec.n_gl) + sg * 1j * np.pi * complex(f(np.zeros(1))[0])
    s, w = _panel_rule(np.r_[-pts[::-1], pts[1:]], spec.n_gl)
    val = np.sum(w * f(s) / (s - 1j * sg * eps * spec.b(s)))
    if not np.isfinite(val):
        raise QuadratureError("gamma quadrature produced a non-finite value")
    return complex(val)


def pv_fourier_identity(xi: float = 1.0, mu: float = 0.05, n: int = 24) -> dict:
    """``p.v. int e^{2 pi i y xi} / y dy`` through the windowed form.

    With ``psi(y) = exp(-pi y^2)``,
    ``p.v. int psi(mu y) e^{2 pi i y xi}/y dy = i pi erf(sqrt(pi) xi / mu)``,
    which tends to ``i pi sgn(xi)``.  The quadrature uses the same odd-part
    scheme as :func:`gamma_integral`.
    """
    if xi == 0:
        raise ConfigError("xi must be nonzero")
    r = np.sqrt(40 / np.pi) / mu
    waves = int(np.ceil(4 * abs(xi) * r)) + 1
    pts = np.linspace(0, r, waves + 1)
    f = lambda y: np.exp(-np.pi * (mu * y) ** 2 + 2j * np.pi * y * xi)
    val = pv_integral(f, r, pts, n)
    exact = 1j * np.pi * special.erf(np.sqrt(np.pi) * xi / mu)
    return {"value": val, "abs": abs(val), "error_vs_pi": abs(abs(val) - np.pi),
            "error_vs_windowed": abs(val - exact)}


def _gamma_grid(base: GammaSpec, lam, sign, eps_grid, x_grid, refine):
    out = np.empty((len(eps_grid), len(x_grid)), complex)
    for i, e in enumerate(eps_grid):
        for j, x in enumerate(x_grid):
            out[i, j] = gamma_integral(base.with_(z=SpectralPoint(lam, float(e), sign), x_d=float(x), refine=refine))
    return out


def gamma_bounds_scan(base: GammaSpec | None = None, lam: float = 1.0, sign: int = 1,
                      eps_grid=None, x_grid=(0.0, 1.0, 2.0, 4.0, 8.0, 16.0),
                      separations=None, deltas=(0.25, 0.5, 1.0)) -> dict:
    """Uniform bound, Hoelder rate and interpolated bound for the gamma integrals.

    (a) ``sup |gamma|`` over the ``(eps, x_d)`` grid and its change under
        mesh doubling;
    (b) at each ``x_d``, the slope and prefactor of
        ``log |gamma_{lam + i s} - gamma_{lam + i0}|`` against ``log s``;
        the growth exponent of the prefactors in ``1 + |x_d|`` over
        ``x_d >= 1``;
    (c) ``|gamma_z - gamma_w| <= (2C)^(1-delta) C'^delta (1+|x_d|)^delta |z-w|^delta``
        for every grid pair with ``|z - w| <= 0.1``, with ``C`` the measured
        sup and ``C'`` the measured Lipschitz constant.
    """
    base = base or GammaSpec()
    eps_grid = np.r_[0.0, np.geomspace(1e-4, 1e-1, 7)] if eps_grid is None else np.asarray(eps_grid, float)
    seps = np.geomspace(1e-5, 1e-2, 7) if separations is None else np.asarray(separations, float)
    x_grid = np.asarray(x_grid, float)
    g1 = _gamma_grid(base, lam, sign, eps_grid, x_grid, base.refine)
    g2 = _gamma_grid(base, lam, sign, eps_grid, x_grid, 2 * base.refine)
    sup1, sup2 = float(np.abs(g1).max()), float(np.abs(g2).max())
    # Hoelder fits against the boundary value
    g0 = _gamma_grid(base, lam, sign, [0.0], x_grid, base.refine)[0]
    gs = _gamma_grid(base, lam, sign, seps, x_grid, base.refine)
    fits = []
    for j in range(len(x_grid)):
        fits.append(fit_power_law(seps, np.abs(gs[:, j] - g0[j]), growth=True, max_residual=np.inf))
    slopes = np.array([f.exponent for f in fits])
    pref = np.array([f.prefactor for f in fits])
    pos = x_grid >= 1
    growth = fit_power_law(1 + x_grid[pos], pref[pos], growth=True, max_residual=np.inf).exponent if pos.sum() >= 2 else np.nan
    # interpolated bound over all pairs
    E = np.r_[0.0, seps, eps_grid[eps_grid > 0]]
    G = np.vstack([g0, gs, g1[eps_grid > 0]])
    dz = np.abs(E[:, None] - E[None, :])
    pair = (dz > 0) & (dz <= 0.1)
    D = np.abs(G[:, None, :] - G[None, :, :])
    w = (1 + np.abs(x_grid))[None, None, :]
    C = float(np.abs(G).max())
    with np.errstate(divide="ignore", invalid="ignore"):
        Cp = float(np.nanmax(np.where(pair[..., None], D / (w * dz[..., None]), np.nan)))
    viol = {}
    for dl in deltas:
        bound = (2 * C) ** (1 - dl) * Cp**dl * w**dl * dz[..., None] ** dl
        viol[dl] = int(np.sum(pair[..., None] & (D > bound * (1 + 1e-9))))
    return {"sup": sup1, "sup_refined": sup2, "sup_change": abs(sup2 - sup1) / sup1,
            "x_grid": x_grid, "slopes": slopes, "prefactors": pref, "prefactor_growth": float(growth),
            "C": C, "C_prime": Cp, "interpolation_violations": viol, "fits": fits}
