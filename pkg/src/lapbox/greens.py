"""Evaluators for the free lattice Green's function G(x; z) = (H0 - z)^{-1}(x, 0).

Four independent routes are provided:

* ``green_1d``: the d = 1 closed form r^|x| / (1/r - r), r + 1/r = 2 - z.
* ``green_trapezoid``: tensor trapezoid rule for the torus integral of
  exp(2 pi i x.xi) / (h0(xi) - z); needs Im z > 0 or z off the spectrum.
* ``green_contour``: time-domain formula

      G(x; z) = i int_0^inf exp(i z t) prod_j exp(-2 i t) i^|x_j| J_|x_j|(2t) dt,

  valid for Im z >= 0 away from critical values.  The real segment
  [0, t0] uses Gauss-Legendre panels; past t0 each Bessel factor is split
  as (H1 + H2)/2 and every product of Hankel functions, which carries a
  single frequency, is integrated along a vertical ray where it decays
  exponentially.  This evaluates the boundary value z = lambda + i0
  directly and stays accurate for large |x| in any dimension.
* ``green_laplace``: heat-kernel Laplace transform for real z below the
  spectrum (and, by the reflection xi -> xi + 1/2, above it).

The lower half-plane is handled by conjugation: G(x; conj z) = conj G(x; z).
"""
from __future__ import annotations

import itertools

import numpy as np
from scipy import fft as sfft
from scipy import special

from .errors import ConfigError, DivergenceError, MeshConditionError

__all__ = [
    "green_1d",
    "green_trapezoid",
    "green_contour",
    "green_contour_table",
    "green_laplace",
    "green_points",
    "green_box_values",
    "mirror_table",
    "axis_cutoff",
    "green_localized_box",
]

GL_ORDER = 20
# exp(-45) ~ 3e-20 bounds the neglected tail of every vertical ray
RAY_DECAY = 45.0


def _gl_panels(a: float, b: float, npanel: int, k: int = GL_ORDER):
    x, w = np.polynomial.legendre.leggauss(k)
    edges = np.linspace(a, b, npanel + 1)
    h = np.diff(edges) / 2
    m = (edges[:-1] + edges[1:]) / 2
    return (m[:, None] + h[:, None] * x).ravel(), (h[:, None] * w).ravel()


def _as_points(xs, d):
    xs = np.atleast_2d(np.asarray(xs, dtype=np.int64))
    if xs.shape[-1] != d:
        raise ConfigError(f"points must have trailing dimension {d}")
    return xs


def green_1d(x, z: complex, sign: int = 1) -> np.ndarray:
    """d = 1 closed form.

    For real ``z`` inside (0, 4) the boundary value ``z + sign*i0`` is
    returned, using ``r = exp(sign*i*theta)``, ``cos theta = 1 - z/2``.
    """
    x = np.abs(np.asarray(x))
    z = complex(z)
    if z.imag == 0 and 0 <= z.real <= 4:
        lam = z.real
        if lam in (0.0, 4.0):
            raise DivergenceError("G is singular at the band edges in d = 1")
        # r = exp(i sign theta), 1/r - r = -2i sign sin(theta)
        r = complex(1 - lam / 2, sign * np.sqrt(lam * (4 - lam)) / 2)
        s = -1j * sign * np.sqrt(lam * (4 - lam))
    else:
        b = 2 - z
        s = np.sqrt(-z) * np.sqrt(4 - z)
        if abs(b + s) < abs(b - s):
            s = -s
        # r = (b - s)/2 written without cancellation; 1/r - r = s
        r = 2 / (b + s)
    val = r**x / s
    if z.imag == 0 and not 0 <= z.real <= 4:
        val = val.real + 0j
    return val


# ---------------------------------------------------------------- trapezoid

def trapezoid_mesh_ok(N: int, scale: float, c: float = 32.0) -> bool:
    return N >= c / scale


def green_trapezoid(d: int, xs, z: complex, N: int, chunk: int = 1 << 22) -> np.ndarray:
    """Trapezoid rule on the ``N^d`` grid: the periodized Green's function.

    Sums over the first axis in slabs so memory stays at ``O(N^(d-1))``.
    """
    xs = _as_points(xs, d)
    h1 = 4 * np.sin(np.pi * np.arange(N) / N) ** 2
    if d == 1:
        g = sfft.ifft(1.0 / (h1 - z))
        return g[xs[:, 0] % N]
    rest = np.zeros((N,) * (d - 1))
    for j in range(d - 1):
        sh = [1] * (d - 1)
        sh[j] = N
        rest = rest + h1.reshape(sh)
    tail_idx = tuple((xs[:, 1:] % N).T)
    phase = np.exp(2j * np.pi * np.outer(np.arange(N), xs[:, 0]) / N)
    out = np.zeros(len(xs), complex)
    for i in range(N):
        slab = sfft.ifftn(1.0 / (rest + (h1[i] - z)))
        out += phase[i] * slab[tail_idx]
    return out / N


def green_trapezoid_torus(d: int, z: complex, N: int) -> np.ndarray:
    """Full periodic kernel on ``Z_N^d`` (dense; use for moderate ``N^d``)."""
    h1 = 4 * np.sin(np.pi * np.arange(N) / N) ** 2
    h = sum(h1.reshape([N if j == a else 1 for j in range(d)]) for a in range(d))
    return sfft.ifftn(1.0 / (h - z))


# ---------------------------------------------------------------- contour

def _t0_for(nmax: int) -> float:
    # past t0 every order satisfies 2t > n comfortably, so H1 and H2 are
    # both O(1) and splitting J = (H1 + H2)/2 loses no digits
    return max(2.0, 0.5 * (nmax + 10 + 2 * nmax ** (1 / 3)))


def _contour_pieces(d: int, nmax: int, lam: float, eps: float):
    """Quadrature nodes, weights and factor tables of the contour formula.

    Yields ``(weights, [table_j])`` pieces with ``table_j`` of shape
    ``(nmax+1, nodes)``; the Green's function on ``|x_j| <= nmax`` is
    ``i^{sum |x_j|} * sum_pieces sum_t weights[t] prod_j table_j[|x_j|, t]``.
    """
    z = lam + 1j * eps
    orders = np.arange(nmax + 1)
    t0 = _t0_for(nmax)
    npan = int(np.ceil(t0 * (abs(lam) + 4 * d + 1) / 4)) + 2
    t, w = _gl_panels(0.0, t0, npan)
    J = special.jv(orders[:, None], 2 * t[None, :])
    yield 1j * w * np.exp(1j * (z - 2 * d) * t), [J] * d
    for m in range(d + 1):
        om = lam - 4 * d + 4 * m
        if om == 0 and eps == 0:
            raise DivergenceError(f"lambda = {lam} is a critical value; contour cannot be rotated")
        if om == 0:
            # zero frequency: only the damping exp(-eps t) helps, stay on the real axis
            ray = 1.0
            s_max = RAY_DECAY / eps
        else:
            ray = 1j * np.sign(om)
            s_max = RAY_DECAY / abs(om)
        s, ws = _gl_panels(0.0, s_max, int(np.ceil(s_max / 2)) + 4)
        tt = t0 + ray * s
        wt = 1j * ws * ray * np.exp(1j * (z - 4 * d + 4 * m) * tt) / 2**d
        H1 = special.hankel1e(orders[:, None], 2 * tt[None, :])
        H2 = special.hankel2e(orders[:, None], 2 * tt[None, :])
        for S in itertools.combinations(range(d), m):
            yield wt, [H1 if j in S else H2 for j in range(d)]


def green_contour(d: int, xs, lam: float, eps: float = 0.0, sign: int = 1) -> np.ndarray:
    """``G(x; lam + sign*i*eps)`` by contour rotation, for points ``xs``.

    ``eps = 0`` gives the boundary value ``lam + sign*i0``.
    """
    xs = np.abs(_as_points(xs, d))
    if eps < 0:
        raise ConfigError("eps must be nonnegative")
    nmax = int(xs.max())
    out = np.zeros(len(xs), complex)
    for wt, tables in _contour_pieces(d, nmax, lam, eps):
        prod = np.ones((len(xs), wt.size), complex)
        for j in range(d):
            prod *= tables[j][xs[:, j]]
        out += prod @ wt
    out *= 1j ** (xs.sum(axis=1) % 4)
    return out if sign > 0 else out.conj()


def green_contour_table(d: int, nmax, lam: float, eps: float = 0.0, sign: int = 1) -> np.ndarray:
    """``G`` on the quadrant ``{0..nmax_1} x ... x {0..nmax_d}`` as a dense tensor.

    ``nmax`` is an integer or one bound per axis.
    """
    nm = (int(nmax),) * d if np.isscalar(nmax) else tuple(int(n) for n in nmax)
    if len(nm) != d:
        raise ConfigError("need one bound per axis")
    shape = tuple(n + 1 for n in nm)
    out = np.zeros(shape, complex)
    for wt, tables in _contour_pieces(d, max(nm), lam, eps):
        out += _khatri_rao_contract([T[: n + 1] for T, n in zip(tables, nm)], wt)
    ph = np.zeros(shape, int)
    for j in range(d):
        ph = ph + np.arange(shape[j]).reshape([-1 if i == j else 1 for i in range(d)])
    out *= 1j ** (ph % 4)
    return out if sign > 0 else out.conj()


def _khatri_rao_contract(tables, w):
    """``sum_t w[t] prod_j tables[j][i_j, t]`` as a d-way tensor."""
    acc = tables[0] * w
    for F in tables[1:-1]:
        acc = (acc[..., None, :] * F.reshape((1,) * (acc.ndim - 1) + F.shape))
    if len(tables) == 1:
        return acc.sum(axis=-1)
    lead = acc.shape[:-1]
    res = acc.reshape(-1, acc.shape[-1]) @ tables[-1].T
    return res.reshape(lead + (tables[-1].shape[0],))


def mirror_table(table: np.ndarray, L: int) -> np.ndarray:
    """Extend a quadrant table to the box ``{-L..L}^d`` using ``G(x) = G(|x|)``."""
    idx = np.abs(np.arange(-L, L + 1))
    return table[np.ix_(*([idx] * table.ndim))]


# ---------------------------------------------------------------- laplace

def _ive(n: int, y: np.ndarray) -> np.ndarray:
    """``exp(-y) I_n(y)``, with the Hankel asymptotic where scipy overflows."""
    y = np.asarray(y, float)
    out = special.ive(n, y)
    big = y > 1e7
    if np.any(big):
        mu = 4.0 * n * n
        yb = y[big]
        s = 1 - (mu - 1) / (8 * yb) + (mu - 1) * (mu - 9) / (2 * (8 * yb) ** 2)
        s -= (mu - 1) * (mu - 9) * (mu - 25) / (6 * (8 * yb) ** 3)
        out[big] = s / np.sqrt(2 * np.pi * yb)
    return out


def green_laplace(d: int, xs, E: float, panel: float = 0.5, t_min: float = 1e-14,
                  derivative: bool = False) -> np.ndarray:
    """Real ``G(x; E)`` for ``E < 0`` or ``E > 4d`` via the heat kernel.

    ``G(x; E) = int_0^inf exp(E t) prod_j exp(-2t) I_{x_j}(2t) dt`` for E < 0,
    integrated in ``u = log t``; energies above the band are reflected with
    ``G(x; E) = -(-1)^{sum x} G(x; 4d - E)``.  ``derivative=True`` returns
    ``dG/dE`` (the same integral with an extra factor ``t``).
    """
    xs = np.abs(_as_points(xs, d))
    if 0 <= E <= 4 * d:
        raise ConfigError(f"E = {E} lies in the spectrum [0, {4 * d}]")
    if E > 4 * d:
        sgn = np.where(xs.sum(axis=1) % 2 == 0, -1.0, 1.0)
        if derivative:
            sgn = -sgn
        return sgn * green_laplace(d, xs, 4 * d - E, panel, t_min, derivative)
    t_max = 45.0 / abs(E)
    lo, hi = np.log(t_min), np.log(t_max)
    u, w = _gl_panels(lo, hi, int(np.ceil((hi - lo) / panel)), k=16)
    t = np.exp(u)
    base = w * t * np.exp(E * t)
    if derivative:
        base = base * t
    out = np.empty(len(xs))
    orders = np.unique(xs)
    tab = {int(n): _ive(int(n), 2 * t) for n in orders}
    for i, x in enumerate(xs):
        f = base.copy()
        for n in x:
            f = f * tab[int(n)]
        out[i] = f.sum()
    return out


# ---------------------------------------------------------------- dispatch

def green_points(d: int, xs, lam: float, eps: float = 0.0, sign: int = 1, method: str = "auto", N: int | None = None):
    """Green's function at ``z = lam + sign*i*eps`` for a list of points.

    ``method``: ``auto`` (laplace for real z off the spectrum, contour
    otherwise), ``contour``, ``laplace``, ``trapezoid`` (needs ``N``) or
    ``closed`` (d = 1).
    """
    xs = _as_points(xs, d)
    off = not 0 <= lam <= 4 * d
    if method == "auto":
        method = "laplace" if (eps == 0 and off) else "contour"
    if method == "laplace":
        if eps != 0:
            raise ConfigError("laplace route needs real z")
        return green_laplace(d, xs, lam).astype(complex)
    if method == "contour":
        return green_contour(d, xs, lam, eps, sign)
    if method == "closed":
        if d != 1:
            raise ConfigError("closed form exists only for d = 1")
        return green_1d(xs[:, 0], lam + 1j * sign * eps if eps else lam, sign)
    if method == "trapezoid":
        if N is None:
            raise ConfigError("trapezoid route needs N")
        scale = eps if not off else max(eps, -lam if lam < 0 else lam - 4 * d)
        if scale <= 0 or not trapezoid_mesh_ok(N, scale):
            raise MeshConditionError(f"N={N} too coarse for distance {scale} to the spectrum")
        return green_trapezoid(d, xs, lam + 1j * sign * eps, N)
    raise ConfigError(f"unknown method {method!r}")


def green_box_values(d: int, L: int, lam: float, eps: float = 0.0, sign: int = 1, method: str = "auto", N: int | None = None) -> np.ndarray:
    """``G`` on the whole box ``{-L..L}^d`` as a dense array."""
    off = not 0 <= lam <= 4 * d
    if method == "auto":
        method = "laplace" if (eps == 0 and off) else "contour"
    if method == "contour":
        return mirror_table(green_contour_table(d, L, lam, eps, sign), L)
    if method == "trapezoid":
        if N is None or N < 4 * L + 1:
            raise ConfigError("trapezoid box evaluation needs N >= 4L + 1")
        g = green_trapezoid_torus(d, lam + 1j * sign * eps, N)
        idx = np.arange(-L, L + 1) % N
        return g[np.ix_(*([idx] * d))]
    # generic route through the point evaluator on the quadrant
    q = np.array(list(itertools.product(range(L + 1), repeat=d)))
    vals = green_points(d, q, lam, eps, sign, method, N).reshape((L + 1,) * d)
    return mirror_table(vals, L)


# ---------------------------------------------------------------- localized kernel

def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, float), 0.0, 1.0)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1 - t, 1.0)), 0.0)
    return a / (a + b)


def axis_cutoff(xi, s0: float = 0.05, s1: float = 0.5):
    """``chi(xi_d)``: 0 where ``sin^2(2 pi xi_d) <= s0``, 1 where it is ``>= s1``.

    Supported away from ``xi_d in {0, 1/2}``, i.e. where ``d h0/d xi_d != 0``.
    """
    s = np.sin(2 * np.pi * np.asarray(xi, float)) ** 2
    return _smooth_step((s - s0) / (s1 - s0))


def green_localized_box(d: int, L: int, lam: float, eps: float = 0.0, sign: int = 1,
                        s0: float = 0.05, s1: float = 0.5, tol: float = 1e-10, n_fft: int = 1 << 14):
    """Kernel of ``chi(D_d) R0(z)`` on ``{-L..L}^d`` with the cutoff of :func:`axis_cutoff`.

    ``chi(D_d)`` is convolution along the last axis with ``psi(m)``, the
    Fourier coefficients of the cutoff, truncated where ``|psi| < tol |psi(0)|``.
    Returns ``(values, m_tail)``.
    """
    xi = np.arange(n_fft) / n_fft
    psi = sfft.ifft(axis_cutoff(xi, s0, s1)).real
    big = np.nonzero(np.abs(psi[: n_fft // 2]) >= tol * abs(psi[0]))[0]
    M = int(big.max())
    nm = (L,) * (d - 1) + (L + M,)
    table = green_contour_table(d, nm, lam, eps, sign)
    idx = np.abs(np.arange(-L, L + 1))
    last = np.abs(np.arange(-L - M, L + M + 1))
    G = table[np.ix_(*([idx] * (d - 1) + [last]))]
    out = np.zeros((2 * L + 1,) * d, complex)
    for m in range(-M, M + 1):
        out += psi[m % n_fft] * G[..., M - m: M - m + 2 * L + 1]
    return out, M
