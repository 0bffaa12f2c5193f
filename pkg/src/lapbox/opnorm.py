"""Finite-section l^p -> l^q operator norms and the slice-constant harness.

Two operator containers share the ``shape / matvec / rmatvec`` protocol:

* :class:`KernelOperator` holds a dense matrix indexed by a lattice box
  (row-major, last coordinate fastest);
* :class:`ConvolutionOperator` holds a translation-invariant kernel
  k(x - y) on a box and applies it by zero-padded FFT.

Norms in the classes (1, q), (p, inf) and (2, 2) are computed exactly;
every other pair gets a certified lower bound from a dual-map fixed point
iteration (Boyd's method) with a witness vector.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import fft as sfft
from scipy import ndimage
from scipy.sparse.linalg import LinearOperator, svds

from .errors import ConfigError, InadmissibleExponents
from .lattice import LatticeBox
from .symbols import ExponentPair, conjugate_exponent, duality_line_pmax, in_region_Sk

__all__ = [
    "KernelOperator",
    "ConvolutionOperator",
    "NormEstimate",
    "AssumptionConstants",
    "SliceFamily",
    "BoundReport",
    "opnorm_exact",
    "opnorm_lower",
    "spectral_norm",
    "slice_constants",
    "composition_constants",
    "pointwise_constant",
    "fourier_slice_constants",
    "prop27_constant",
    "verify_bound",
    "family_spread",
    "riesz_thorin_check",
    "chi2",
    "partition_identity",
    "dyadic_cutoff_check",
    "agmon_hormander",
    "task_rng",
]


def task_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for task ``index`` under master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _pnorm(v, p):
    a = np.abs(v)
    if np.isinf(p):
        return float(a.max(initial=0.0))
    m = a.max(initial=0.0)
    if m == 0:
        return 0.0
    return float(m * np.sum((a / m) ** p) ** (1.0 / p))


# ---------------------------------------------------------------- operators

class KernelOperator:
    """Dense kernel ``K(x, y)`` with rows and columns indexed by lattice boxes."""

    def __init__(self, matrix, row_box: LatticeBox | None = None, col_box: LatticeBox | None = None,
                 translation_invariant: np.ndarray | None = None):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2:
            raise ConfigError("kernel matrix must be 2-D")
        if not np.all(np.isfinite(m)):
            raise ConfigError("kernel has non-finite entries")
        if row_box is not None and row_box.size != m.shape[0]:
            raise ConfigError("row box does not match matrix")
        if col_box is not None and col_box.size != m.shape[1]:
            raise ConfigError("column box does not match matrix")
        self.matrix = m
        self.row_box = row_box
        self.col_box = col_box if col_box is not None else row_box
        self.translation_invariant = translation_invariant

    @classmethod
    def from_function(cls, box: LatticeBox, fn: Callable) -> "KernelOperator":
        X = box.coords()
        return cls(fn(X[:, None, :], X[None, :, :]), box, box)

    @classmethod
    def identity(cls, box: LatticeBox) -> "KernelOperator":
        return cls(np.eye(box.size), box, box)

    @property
    def shape(self):
        return self.matrix.shape

    def matvec(self, f):
        return self.matrix @ f

    def rmatvec(self, g):
        return self.matrix.conj().T @ g

    def adjoint(self) -> "KernelOperator":
        ti = None if self.translation_invariant is None else _reflect_conj(self.translation_invariant)
        return KernelOperator(self.matrix.conj().T, self.col_box, self.row_box, ti)

    def to_dense(self) -> np.ndarray:
        return self.matrix


def _reflect_conj(k):
    return np.conj(k[(slice(None, None, -1),) * k.ndim])


class ConvolutionOperator:
    """``(K f)(x) = sum_{y in box} k(x - y) f(y)`` for ``x`` in the box.

    ``kernel`` is given on the difference box ``{-2L..2L}^d``.  Products
    use a circular convolution of length ``M >= 4L + 1``, which leaves the
    box values free of wrap-around.
    """

    def __init__(self, box: LatticeBox, kernel: np.ndarray):
        k = np.asarray(kernel, complex)
        if k.shape != (4 * box.L + 1,) * box.d:
            raise ConfigError("kernel must live on the box of half-width 2L")
        if not np.all(np.isfinite(k)):
            raise ConfigError("kernel has non-finite entries")
        self.box = box
        self.kernel = k
        self.translation_invariant = k
        M = sfft.next_fast_len(4 * box.L + 1)
        self.M = M
        idx = np.arange(-2 * box.L, 2 * box.L + 1) % M
        mesh = np.ix_(*([idx] * box.d))
        kt = np.zeros((M,) * box.d, complex)
        kt[mesh] = k
        self._khat = sfft.fftn(kt)
        kt_adj = np.zeros((M,) * box.d, complex)
        kt_adj[mesh] = _reflect_conj(k)
        self._khat_adj = sfft.fftn(kt_adj)
        self._bidx = np.arange(-box.L, box.L + 1) % M

    @property
    def shape(self):
        return (self.box.size, self.box.size)

    @property
    def row_box(self):
        return self.box

    col_box = row_box

    def _apply(self, khat, f):
        u = np.zeros((self.M,) * self.box.d, complex)
        mesh = np.ix_(*([self._bidx] * self.box.d))
        u[mesh] = np.reshape(f, self.box.shape)
        v = sfft.ifftn(khat * sfft.fftn(u))
        return v[mesh].ravel()

    def matvec(self, f):
        return self._apply(self._khat, f)

    def rmatvec(self, g):
        return self._apply(self._khat_adj, g)

    def adjoint(self) -> "ConvolutionOperator":
        return ConvolutionOperator(self.box, _reflect_conj(self.kernel))

    def to_dense(self) -> np.ndarray:
        X = self.box.coords()
        D = X[:, None, :] - X[None, :, :] + 2 * self.box.L
        return self.kernel[tuple(np.moveaxis(D, -1, 0))]

    def to_kernel_operator(self) -> KernelOperator:
        return KernelOperator(self.to_dense(), self.box, self.box, self.kernel)

    def _box_correlate(self, a):
        """``sum_{x in box} a(x - y)`` for every ``y`` in the box."""
        L, d = self.box.L, self.box.d
        M = self.M
        idx = np.arange(-2 * L, 2 * L + 1) % M
        at = np.zeros((M,) * d)
        at[np.ix_(*([idx] * d))] = a
        ind = np.zeros((M,) * d)
        ind[np.ix_(*([self._bidx] * d))] = 1.0
        # c(y) = sum_x a(x - y) ind(x)  =  (a_reflected * ind)(y)
        c = sfft.ifftn(sfft.fftn(ind) * np.conj(sfft.fftn(at))).real
        return c[np.ix_(*([self._bidx] * d))]

    def column_norms(self, q: float) -> np.ndarray:
        a = np.abs(self.kernel)
        if np.isinf(q):
            # column y sees a(x - y) on a window of half-width L centred at -y
            mx = ndimage.maximum_filter(a, size=2 * self.box.L + 1, mode="constant")
            c = self.box.L
            sl = tuple(slice(3 * c, c - 1 if c > 0 else None, -1) for _ in range(self.box.d))
            return mx[sl].ravel()
        s = np.maximum(self._box_correlate(a**q), 0.0)
        return s.ravel() ** (1 / q)

    def row_norms(self, r: float) -> np.ndarray:
        adj = self.adjoint()
        return adj.column_norms(r)


# ---------------------------------------------------------------- norms

@dataclass
class NormEstimate:
    value: float
    status: str
    witness: np.ndarray | None = field(default=None, repr=False)
    p: float = 2.0
    q: float = 2.0
    history: list = field(default_factory=list, repr=False)


def spectral_norm(K, tol: float = 1e-12) -> float:
    """Largest singular value; dense SVD for small operators, ARPACK otherwise."""
    m, n = K.shape
    if min(m, n) <= 600 and hasattr(K, "to_dense") and m * n <= 4_000_000:
        return float(np.linalg.norm(K.to_dense(), 2))
    op = LinearOperator((m, n), matvec=K.matvec, rmatvec=K.rmatvec, dtype=complex)
    s = svds(op, k=1, which="LM", return_singular_vectors=False, tol=tol,
             v0=np.ones(min(m, n)) / np.sqrt(min(m, n)))
    return float(s[0])


def opnorm_exact(K, p: float, q: float) -> NormEstimate:
    """Exact ``||K||_{p->q}`` for ``p = 1``, ``q = inf`` or ``p = q = 2``."""
    if p == 1:
        if isinstance(K, ConvolutionOperator):
            val = K.column_norms(q).max()
        else:
            M = K.to_dense()
            val = max((_pnorm(M[:, j], q) for j in range(M.shape[1])), default=0.0)
    elif np.isinf(q):
        ps = conjugate_exponent(p)
        if isinstance(K, ConvolutionOperator):
            val = K.row_norms(ps).max()
        else:
            M = K.to_dense()
            val = max((_pnorm(M[i, :], ps) for i in range(M.shape[0])), default=0.0)
    elif p == 2 and q == 2:
        val = spectral_norm(K)
    else:
        raise ConfigError(f"({p}, {q}) is not an exact class; use opnorm_lower")
    return NormEstimate(float(val), "exact", None, p, q)


def _duality_map(y, r):
    """Vector ``w`` with ``<y, w> = ||y||_r * ||w||_{r*}`` (Hoelder equality)."""
    a = np.abs(y)
    if np.isinf(r):
        w = np.zeros_like(y)
        i = int(np.argmax(a))
        if a[i] > 0:
            w[i] = y[i] / a[i]
        return w
    ph = np.divide(y, a, out=np.zeros_like(y), where=a > 0)
    if r == 1:
        return ph
    return ph * a ** (r - 1)


def _ratio(K, f, p, q):
    nf = _pnorm(f, p)
    return 0.0 if nf == 0 else _pnorm(K.matvec(f), q) / nf


def opnorm_lower(K, p: float, q: float, restarts: int = 16, seed: int = 0, max_iter: int = 200,
                 tol: float = 1e-10, start=None, vertex_scan: int = 4096) -> NormEstimate:
    """Certified lower bound for ``||K||_{p->q}`` with a witness.

    Each restart iterates ``f <- J_{p*}(K^* J_q(K f))`` normalized in
    ``l^p``, where ``J_r`` is the duality map of ``l^r``; every iterate is
    a feasible point, so the best ratio seen is a lower bound.  A supplied
    ``start`` is evaluated first, hence the result is never below its ratio.
    Restart ``i`` draws from the stream ``(seed, i)``.  For ``p = 1`` or
    ``q = inf`` and at most ``vertex_scan`` unknowns the extreme points
    (unit vectors, respectively optimal inputs for each row) are also
    scanned.
    """
    if not (p >= 1 and q >= 1):
        raise ConfigError("p and q must be >= 1")
    m, n = K.shape
    ps = conjugate_exponent(p)
    best, witness, history = 0.0, None, []

    def consider(f):
        nonlocal best, witness
        r = _ratio(K, f, p, q)
        if r > best:
            best, witness = r, f.copy()
        return r

    def ascend(f):
        nf = _pnorm(f, p)
        if nf == 0:
            return
        f = f / nf
        prev = consider(f)
        for _ in range(max_iter):
            g = K.matvec(f)
            if not np.any(g):
                return
            h = K.rmatvec(_duality_map(g, q))
            f = _duality_map(h, ps)
            nf = _pnorm(f, p)
            if nf == 0:
                return
            f = f / nf
            r = consider(f)
            if abs(r - prev) <= tol * max(r, 1e-300):
                return
            prev = r

    if start is not None:
        ascend(np.asarray(start, complex).ravel())
    for i in range(restarts):
        rng = task_rng(seed, i)
        ascend(rng.standard_normal(n) + 1j * rng.standard_normal(n))
        history.append(best)
    if p == 1 and n <= vertex_scan:
        e = np.zeros(n, complex)
        for j in range(n):
            e[:] = 0
            e[j] = 1
            consider(e)
    if np.isinf(q) and m <= vertex_scan:
        e = np.zeros(m, complex)
        for i in range(m):
            e[:] = 0
            e[i] = 1
            row = K.rmatvec(e)
            consider(_duality_map(row, ps) if np.any(row) else row)
    if witness is None:
        witness = np.zeros(n, complex)
    return NormEstimate(float(best), "lower_bound", witness, p, q, history)


# ---------------------------------------------------------------- slices

class SliceFamily:
    """Slice operators ``T_{x_d,y_d}`` and compositions ``S_{x_d}(y_d, z_d)``.

    Slices act on the (d-1)-dimensional section of the box; for a
    :class:`ConvolutionOperator` they depend on ``x_d - y_d`` only.
    """

    def __init__(self, K):
        box = K.row_box
        if box is None or K.col_box is None or box != K.col_box:
            raise ConfigError("slice analysis needs a square box-indexed kernel")
        if box.d < 2:
            raise ConfigError("slices need d >= 2")
        self.K = K
        self.box = box
        self.section = LatticeBox(box.d - 1, box.L)
        if isinstance(K, ConvolutionOperator):
            X = self.section.coords()
            D = X[:, None, :] - X[None, :, :] + 2 * box.L
            self._didx = tuple(np.moveaxis(D, -1, 0))
            self._M4 = None
        else:
            n1 = self.section.size
            self._M4 = K.to_dense().reshape(n1, box.side, n1, box.side)

    @property
    def coords(self):
        return np.arange(-self.box.L, self.box.L + 1)

    def slice(self, xd: int, yd: int) -> np.ndarray:
        L = self.box.L
        if self._M4 is not None:
            return self._M4[:, xd + L, :, yd + L]
        kd = self.K.kernel[..., xd - yd + 2 * L]
        return kd[self._didx]

    def composition(self, xd: int, yd: int, zd: int) -> np.ndarray:
        return self.slice(xd, yd).conj().T @ self.slice(xd, zd)

    def pairs(self):
        """Representative ``(x_d, y_d)`` pairs (one per difference if translation invariant)."""
        c = self.coords
        if self._M4 is None:
            L = self.box.L
            return [(min(L, L + dlt), min(L, L + dlt) - dlt) for dlt in range(-2 * L, 2 * L + 1)]
        return list(itertools.product(c, c))

    def triples(self):
        c = self.coords
        if self._M4 is None:
            L = self.box.L
            out = []
            # S depends on (a, b) = (x_d - y_d, x_d - z_d); pick any admissible x_d
            for a in range(-2 * L, 2 * L + 1):
                for b in range(-2 * L, 2 * L + 1):
                    lo, hi = max(-L + a, -L + b, -L), min(L + a, L + b, L)
                    if lo <= hi:
                        out.append((lo, lo - a, lo - b))
            return out
        return list(itertools.product(c, c, c))

    def spot_check(self, rng: np.random.Generator, n: int = 3) -> float:
        """Max deviation between ``T_{x_d,y_d} g`` and the parent kernel applied to ``g (x) delta_{y_d}``."""
        err = 0.0
        L = self.box.L
        for _ in range(n):
            xd, yd = rng.integers(-L, L + 1, size=2)
            g = rng.standard_normal(self.section.size) + 0j
            f = np.zeros((self.section.size, self.box.side), complex)
            f[:, yd + L] = g
            full = self.K.matvec(f.ravel()).reshape(self.section.size, self.box.side)[:, xd + L]
            err = max(err, float(np.abs(full - self.slice(xd, yd) @ g).max()))
        return err


@dataclass
class AssumptionConstants:
    k: float
    C0: float | None = None
    C1: float | None = None
    C2: float | None = None
    C3: float | None = None
    C4: float | None = None

    def merged(self, other: "AssumptionConstants") -> "AssumptionConstants":
        vals = {n: getattr(other, n) if getattr(other, n) is not None else getattr(self, n)
                for n in ("C0", "C1", "C2", "C3", "C4")}
        return AssumptionConstants(self.k, **vals)


def slice_constants(K, k: float, fam: SliceFamily | None = None) -> AssumptionConstants:
    """``C0 = sup ||T||_{2->2}``, ``C1 = sup (1+|x_d-y_d|)^k ||T||_{1->inf}``."""
    fam = fam or SliceFamily(K)
    C0 = C1 = 0.0
    for xd, yd in fam.pairs():
        T = fam.slice(xd, yd)
        C0 = max(C0, float(np.linalg.norm(T, 2)) if T.size else 0.0)
        C1 = max(C1, (1 + abs(xd - yd)) ** k * float(np.abs(T).max(initial=0.0)))
    return AssumptionConstants(k, C0=C0, C1=C1)


def composition_constants(K, k: float, fam: SliceFamily | None = None) -> AssumptionConstants:
    """``C2^2 = sup ||S||_{2->2}``, ``C3^2 = sup (1+|y_d-z_d|)^k ||S||_{1->inf}``."""
    fam = fam or SliceFamily(K)
    s2 = s3 = 0.0
    for xd, yd, zd in fam.triples():
        S = fam.composition(xd, yd, zd)
        s2 = max(s2, float(np.linalg.norm(S, 2)))
        s3 = max(s3, (1 + abs(yd - zd)) ** k * float(np.abs(S).max(initial=0.0)))
    return AssumptionConstants(k, C2=float(np.sqrt(s2)), C3=float(np.sqrt(s3)))


def pointwise_constant(K, k: float) -> float:
    """``C4 = sup (1 + |x - y|)^k |K(x, y)|`` (Euclidean ``|x - y|``)."""
    if isinstance(K, ConvolutionOperator):
        L2 = 2 * K.box.L
        r = LatticeBox(K.box.d, L2).radius()
        return float(((1 + r) ** k * np.abs(K.kernel)).max())
    X = K.row_box.coords()
    Y = K.col_box.coords()
    r = np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=-1)
    return float(((1 + r) ** k * np.abs(K.to_dense())).max())


def fourier_slice_constants(K: ConvolutionOperator, k: float, pad: int = 4) -> AssumptionConstants:
    """Constants from the translation-invariant formulas.

    C0 = sup_{delta, xi'} |sum_{x'} k(x', delta) e^{-2 pi i x'.xi'}|,
    C1 = sup (1+|delta|)^k sup_{x'} |k(x', delta)|,
    C2^2 = sup_{a, b, xi'} |k^_a(xi')| |k^_b(xi')|  (= C0^2),
    C3^2 = sup (1+|a-b|)^k sup_w |sum_{x'} conj k_a(x') k_b(x' - w)|.

    The kernel truncated to the difference box is treated as an operator
    on the whole lattice, so these dominate the finite-section values.
    """
    d, L = K.box.d, K.box.L
    ker = K.kernel
    n = 4 * L + 1
    P = sfft.next_fast_len(pad * n)
    axes = tuple(range(d - 1))
    khat = sfft.fftn(ker, s=(P,) * (d - 1), axes=axes)
    mags = np.abs(khat).reshape(-1, n).max(axis=0)
    C0 = float(mags.max())
    deltas = np.arange(-2 * L, 2 * L + 1)
    sup_x = np.abs(ker).reshape(-1, n).max(axis=0)
    C1 = float(((1 + np.abs(deltas)) ** k * sup_x).max())
    # cross-correlations of slices via one FFT per pair of differences
    Q = sfft.next_fast_len(2 * n)
    kf = sfft.fftn(ker, s=(Q,) * (d - 1), axes=axes).reshape(-1, n)
    s3 = 0.0
    for ia in range(n):
        corr = sfft.ifft(np.conj(kf[:, ia])[:, None] * kf, axis=0) if d == 2 else None
        if d > 2:
            shp = (Q,) * (d - 1)
            prod = (np.conj(kf[:, ia])[:, None] * kf).reshape(shp + (n,))
            corr = sfft.ifftn(prod, axes=axes).reshape(-1, n)
        w = (1 + np.abs(deltas[ia] - deltas)) ** k
        s3 = max(s3, float((w * np.abs(corr).max(axis=0)).max()))
    return AssumptionConstants(k, C0=C0, C1=C1, C2=C0, C3=float(np.sqrt(s3)))


# ---------------------------------------------------------------- bounds

def prop27_constant(c: AssumptionConstants, p: float, q: float, k: float):
    """The piecewise constant ``C_{p,q,k,l}`` (first matching case) and the case number."""
    ip = 1.0 / p
    iq = 0.0 if np.isinf(q) else 1.0 / q
    ips = 1.0 - ip
    il = ip - iq
    if il <= 0:
        raise InadmissibleExponents("need 1/p - 1/q > 0")
    l = 1.0 / il
    C2, C3, C4 = c.C2, c.C3, c.C4
    if None in (C2, C3, C4):
        raise ConfigError("C2, C3 and C4 are required")
    tol = 1e-12
    if (p <= (k + 1) * (2 * k + 1) / (k * k + 3 * k + 1) + tol
            and (np.isinf(q) or q > (1 + 2 * k) / k) and (k + 1) * ips / k <= iq + tol):
        return C2 ** (2 * ips) * C3 ** (2 * ip - 1) * C4 ** (1 - 2 * iq), 1
    if 1 <= l <= k + 1 and k * iq / (k + 1) < ips < (k + 1) * iq / k:
        e2 = 2 * (k + 1) / (2 * k + 1) * (1 - 1 / l)
        e3 = (2 * (k + 1) - l) / ((2 * k + 1) * l)
        e4 = (l + 2 * k) / ((2 * k + 1) * l)
        return C2**e2 * C3**e3 * C4**e4, 2
    if p < (1 + 2 * k) / (1 + k) and (np.isinf(q) or q >= (2 * k + 1) * (k + 1) / k**2 - tol) and (k + 1) * iq / k <= ips + tol:
        qs = conjugate_exponent(q)
        return C2 ** (2 * iq) * C3 ** (2 / qs - 1) * C4 ** (1 - 2 * ips), 3
    raise InadmissibleExponents(f"(p, q, k) = ({p}, {q}, {k}) matches none of the three cases")


def agmon_hormander(u: np.ndarray, box: LatticeBox, centers=None) -> float:
    """``sup_{R >= 1, x0} (R^{-1} sum_{|x - x0| <= R} |u|^2)^{1/2}`` over ``centers``.

    Default centres: the origin and the site of largest ``|u|``.
    """
    v = np.abs(np.reshape(u, box.shape)) ** 2
    X = box.coords()
    if centers is None:
        centers = [np.zeros(box.d, int), X[int(np.argmax(v.ravel()))]]
    best = 0.0
    for c in centers:
        r = np.linalg.norm(X - np.asarray(c), axis=1)
        o = np.argsort(r, kind="stable")
        rs, cs = r[o], np.cumsum(v.ravel()[o])
        last = np.r_[rs[1:] != rs[:-1], True]
        rs, cs = rs[last], cs[last]
        keep = rs >= 1
        if np.any(rs < 1):
            # R in [1, next radius) sees the mass inside the unit ball at R = 1
            best = max(best, float(cs[~keep][-1]))
        if np.any(keep):
            best = max(best, float((cs[keep] / rs[keep]).max()))
    return float(np.sqrt(best))


@dataclass
class BoundReport:
    which: str
    p: float
    q: float
    k: float
    combination: float
    ratios: np.ndarray
    M_hat: float
    case: int | None = None
    witness_ratio: float | None = None


def verify_bound(K, constants: AssumptionConstants, p: float, q: float, k: float, which: str,
                 trials: int = 32, seed: int = 0, include_witness: bool = True,
                 restarts: int = 4) -> BoundReport:
    """Empirical constant ``M^ = max ||Kf|| / (C-combination ||f||)`` over test functions.

    ``prop22``: duality line ``q = p*``, ``1 <= p <= 2(k+1)/(k+2)``, target
        ``l^{p*}``, combination ``C0^{2-2/p} C1^{2/p-1}``.
    ``prop25``: ``1 <= p <= 2(k+1)/(k+2)``, target the Agmon-Hoermander
        seminorm, combination ``C2^{2-2/p} C3^{2/p-1}`` (``q`` ignored).
    ``prop27``: ``(1/p, 1/q)`` in ``S_k``, target ``l^q``, combination
        ``C_{p,q,k,l}``.
    """
    pmax = duality_line_pmax(k)
    case = None
    if which == "prop22":
        if not (1 <= p <= pmax + 1e-12) or abs(1 / p + (0 if np.isinf(q) else 1 / q) - 1) > 1e-12:
            raise InadmissibleExponents(f"prop22 needs q = p* and 1 <= p <= {pmax:.6g}")
        comb = constants.C0 ** (2 - 2 / p) * constants.C1 ** (2 / p - 1)
        target = lambda g: _pnorm(g, q)
    elif which == "prop25":
        if not 1 <= p <= pmax + 1e-12:
            raise InadmissibleExponents(f"prop25 needs 1 <= p <= {pmax:.6g}")
        comb = constants.C2 ** (2 - 2 / p) * constants.C3 ** (2 / p - 1)
        target = lambda g: agmon_hormander(g, K.row_box)
    elif which == "prop27":
        if not in_region_Sk(ExponentPair.from_pq(p, q), k):
            raise InadmissibleExponents(f"(1/p, 1/q) = ({1 / p:.4g}, {0 if np.isinf(q) else 1 / q:.4g}) not in S_k")
        comb, case = prop27_constant(constants, p, q, k)
    else:
        raise ConfigError(f"unknown bound {which!r}")
    if which == "prop27":
        target = lambda g: _pnorm(g, q)
    n = K.shape[1]
    ratios = []
    for i in range(trials):
        rng = task_rng(seed, 10_000 + i)
        f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        ratios.append(target(K.matvec(f)) / (_pnorm(f, p) * comb) if comb > 0 else 0.0)
    wr = None
    if include_witness and comb > 0:
        qq = 2.0 if which == "prop25" else q
        est = opnorm_lower(K, p, qq, restarts=restarts, seed=seed)
        wr = target(K.matvec(est.witness)) / (_pnorm(est.witness, p) * comb) if est.value > 0 else 0.0
        ratios.append(wr)
    ratios = np.array(ratios, float)
    return BoundReport(which, p, q, k, float(comb), ratios, float(ratios.max(initial=0.0)), case, wr)


def family_spread(reports) -> float:
    """``max M^ / min M^ - 1`` over a family of reports."""
    m = np.array([r.M_hat for r in reports])
    if np.any(m <= 0):
        return 0.0 if np.all(m == 0) else np.inf
    return float(m.max() / m.min() - 1)


def riesz_thorin_check(K, k: float, samples: int = 100, seed: int = 0, restarts: int = 2,
                       constants=None, slack: float = 1e-9) -> dict:
    """Sample ``(p, slice)`` and compare ``||T||_{p->p*}`` to the interpolated bound.

    ``K`` is one operator or a list (a family); each sample draws a member,
    an exponent ``p in (1, 2)`` and a slice ``(x_d, y_d)``.  The bound uses
    that member's own ``C0, C1`` (``constants`` may supply them, one per member).
    """
    family = list(K) if isinstance(K, (list, tuple)) else [K]
    fams = [SliceFamily(m) for m in family]
    if constants is None:
        consts = [slice_constants(m, k, f) for m, f in zip(family, fams)]
    else:
        consts = list(constants) if isinstance(constants, (list, tuple)) else [constants]
    if len(consts) != len(family):
        raise ConfigError("need one set of constants per family member")
    rows = []
    for i in range(samples):
        rng = task_rng(seed, i)
        m = int(rng.integers(len(family)))
        fam, c = fams[m], consts[m]
        L = fam.box.L
        p = float(rng.uniform(1.0, 2.0))
        xd, yd = (int(v) for v in rng.integers(-L, L + 1, size=2))
        T = KernelOperator(fam.slice(xd, yd))
        ps = conjugate_exponent(p)
        meas = opnorm_lower(T, p, ps, restarts=restarts, seed=seed + i, max_iter=100).value
        bound = c.C0 ** (2 - 2 / p) * c.C1 ** (2 / p - 1) * (1 + abs(xd - yd)) ** (-k * (2 / p - 1))
        rows.append((m, p, xd, yd, meas, bound, meas > bound * (1 + slack)))
    viol = sum(r[-1] for r in rows)
    return {"constants": consts if len(consts) > 1 else consts[0], "samples": rows, "violations": int(viol),
            "max_ratio": max((r[4] / r[5] for r in rows if r[5] > 0), default=0.0)}


# ---------------------------------------------------------------- dyadic cutoffs

def chi2(t, order: int = 3):
    """Plateau cutoff: 1 on ``|t| <= 1``, 0 on ``|t| >= 2``, smoothstep between.

    ``order`` 3 is the cubic smoothstep, 5 the quintic one.
    """
    s = np.clip(2.0 - np.abs(np.asarray(t, float)), 0.0, 1.0)
    if order == 3:
        return s * s * (3 - 2 * s)
    if order == 5:
        return s**3 * (10 - 15 * s + 6 * s * s)
    raise ConfigError("smoothstep order must be 3 or 5")


def triangle(t):
    return np.clip(1.0 - np.abs(np.asarray(t, float)), 0.0, None)


def partition_identity(F: Callable, j: int, xs, chi_order: int = 3) -> dict:
    """Check ``F((x-y)/2^j) = L_j^{-1} sum_z psi((2x-z)/2^{j+1}, (2y-z)/2^{j+1})``.

    ``psi(a, b) = F(a - b) chi2(a + b)`` and
    ``L_j^{-1} = sum_z chi2(z/2^j)`` (the proof's normalization).
    """
    if j < 0:
        raise ConfigError("j must be nonnegative")
    zmax = int(np.ceil(2 * 2**j)) + 2 * int(np.max(np.abs(xs))) + 2
    z = np.arange(-zmax, zmax + 1)
    norm = float(chi2(z / 2**j, chi_order).sum())
    xs = np.asarray(xs)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    a = (2 * X[..., None] - z) / 2 ** (j + 1)
    b = (2 * Y[..., None] - z) / 2 ** (j + 1)
    rhs = (F(a - b) * chi2(a + b, chi_order)).sum(axis=-1) / norm
    lhs = F((X - Y) / 2**j)
    return {"j": j, "normalization": norm, "max_error": float(np.abs(lhs - rhs).max()),
            "normalization_ok": bool(2**j <= norm <= 2 ** (j + 2))}


def dyadic_cutoff_check(F: Callable, js, K: ConvolutionOperator | None = None, p: float = 4 / 3,
                        restarts: int = 2, seed: int = 0, max_iter: int = 60, chi_order: int = 3) -> dict:
    """Partition identity for each ``j`` and, given ``K``, growth of ``||K^{j,conv}||_{p->2}``.

    ``K^{j,conv}(x, y) = F((x_d - y_d)/2^j) K(x, y)``; the growth exponent
    is the slope of ``log2 ||K^{j,conv}||`` against ``j``.
    """
    out = {"identity": []}
    for j in js:
        L = K.box.L if K is not None else 8
        out["identity"].append(partition_identity(F, j, np.arange(-L, L + 1), chi_order))
    if K is not None:
        L2 = 2 * K.box.L
        dd = np.arange(-L2, L2 + 1)
        norms = []
        for j in js:
            w = F(dd / 2**j).reshape((1,) * (K.box.d - 1) + (-1,))
            Kj = ConvolutionOperator(K.box, K.kernel * w)
            norms.append(opnorm_lower(Kj, p, 2.0, restarts=restarts, seed=seed, max_iter=max_iter).value)
        norms = np.array(norms)
        js_arr = np.asarray(js, float)
        slope = np.polyfit(js_arr, np.log2(norms), 1)[0]
        out.update(norms=norms, growth_exponent=float(slope))
    return out
