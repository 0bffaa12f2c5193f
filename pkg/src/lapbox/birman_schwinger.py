"""Birman-Schwinger matrices K(z) = W1 R0(z) W2 restricted to supp V.

``I + K(z)`` is singular exactly when ``z`` is an eigenvalue of
``H0 + V`` (off the spectrum of H0) or a point of the Birman-Schwinger
set (on it).  Matrix entries are ``W1(x) G(x - y; z) W2(y)`` with ``G``
evaluated once per distinct displacement.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, sparse
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import eigsh

from . import greens
from .errors import ConfigError, DivergenceError
from .fitting import DecayFit, fit_power_law
from .lattice import LatticeBox, LatticeFunction
from .potential import Potential
from .resolvent import QuadratureSpec, SpectralPoint, limiting_absorption

__all__ = [
    "Potential",
    "BSMatrix",
    "BoundState",
    "ScanResult",
    "bs_matrix",
    "bound_states",
    "dense_eigenvalue",
    "bound_state_vectors",
    "holder_fit",
    "bs_scan",
]


@dataclass(frozen=True, eq=False)
class BSMatrix:
    """``entries[i, j] = W1(x_i) G(x_i - x_j; z) W2(x_j)`` over ``V.sites``."""

    z: SpectralPoint
    entries: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def identity_plus(self) -> np.ndarray:
        return np.eye(self.size) + self.entries

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2)) if self.size else 0.0

    def min_singular(self) -> float:
        if self.size == 0:
            return 1.0
        return float(np.linalg.svd(self.identity_plus(), compute_uv=False).min())


@dataclass(frozen=True)
class BoundState:
    energy: float
    dense_energy: float | None
    verified: bool
    note: str = ""

    @property
    def discrepancy(self) -> float:
        return np.inf if self.dense_energy is None else abs(self.energy - self.dense_energy)


@dataclass
class ScanResult:
    """Minimal singular values of ``I + K(lam + sign*i0)`` on a grid."""

    lams: np.ndarray
    smin: np.ndarray
    sign: int
    threshold: float
    sup_norm: float
    dips: list = field(default_factory=list)
    refinements: list = field(default_factory=list)

    def __post_init__(self):
        o = np.argsort(self.lams)
        self.lams, self.smin = np.asarray(self.lams)[o], np.asarray(self.smin)[o]


def _displacements(V: Potential):
    D = V.sites[:, None, :] - V.sites[None, :, :]
    uniq, inv = np.unique(D.reshape(-1, V.d), axis=0, return_inverse=True)
    return uniq, inv.reshape(V.size, V.size)


def bs_matrix(d: int, V: Potential, z: SpectralPoint, quad: QuadratureSpec | None = None,
              method: str = "auto") -> BSMatrix:
    """Assemble ``K(z)``.

    ``method='extrapolate'`` obtains boundary values by eps-extrapolation
    with ``quad`` and raises :class:`DivergenceError` if any displacement
    is flagged; other methods are passed to :func:`greens.green_points`.
    """
    if V.d != d:
        raise ConfigError("potential dimension mismatch")
    if V.size == 0:
        return BSMatrix(z, np.zeros((0, 0), complex), {"method": method})
    uniq, inv = _displacements(V)
    prov = {"method": method, "n_displacements": len(uniq)}
    if method == "extrapolate":
        if z.eps != 0:
            raise ConfigError("extrapolate is for boundary values (eps = 0)")
        quad = quad or QuadratureSpec()
        lims = [limiting_absorption(d, u, z.lam, z.sign, quad) for u in uniq]
        if any(lv.diverged for lv in lims):
            raise DivergenceError(f"limiting absorption diverged at lambda = {z.lam}")
        g = np.array([lv.value for lv in lims])
        prov["residual"] = max(lv.residual for lv in lims)
    else:
        g = greens.green_points(d, uniq, z.lam, z.eps, z.sign, method, quad.N if quad else None)
    G = g[inv]
    K = V.W1[:, None] * G * V.W2[None, :]
    return BSMatrix(z, K, prov)


# ---------------------------------------------------------------- bound states

def _decay_rate(d: int, E: float) -> float:
    """Slowest sup-norm decay rate of ``G(.; E)`` for real ``E`` off ``[0, 4d]``."""
    gap = -E if E < 0 else E - 4 * d
    return float(np.arccosh(1 + gap / (2 * d)))


def dense_eigenvalue(d: int, V: Potential, E: float, tol: float = 1e-8, max_sites: int = 2_000_000):
    """Eigenvalue of ``H0 + V`` nearest ``E`` on a Dirichlet box.

    The box radius makes ``exp(-2 kappa R)`` below ``tol``.  Returns
    ``(eigenvalue, R)`` or ``(None, R)`` when the box would exceed
    ``max_sites``.
    """
    kappa = _decay_rate(d, E)
    R = V.extent() + int(np.ceil(0.5 * np.log(1 / tol) / kappa)) + 2
    if d == 1:
        n = 2 * R + 1
        diag = np.full(n, 2.0)
        diag[V.sites[:, 0] + R] += V.values
        w = eigh_tridiagonal(diag, -np.ones(n - 1), eigvals_only=True)
        return float(w[np.argmin(np.abs(w - E))]), R
    side = 2 * R + 1
    if side**d > max_sites:
        return None, R
    I = sparse.identity(side, format="csr")
    T = sparse.diags([-np.ones(side - 1), 2 * np.ones(side), -np.ones(side - 1)], [-1, 0, 1], format="csr")
    H = sparse.csr_matrix((side**d, side**d))
    for a in range(d):
        term = sparse.identity(1, format="csr")
        for b in range(d):
            term = sparse.kron(term, T if a == b else I, format="csr")
        H = H + term
    idx = np.ravel_multi_index(tuple((V.sites + R).T), (side,) * d)
    Vd = np.zeros(side**d)
    Vd[idx] = V.values
    H = H + sparse.diags(Vd)
    # bound states sit at the edges of the spectrum: plain Lanczos first
    k = min(6, side**d - 2)
    w = eigsh(H, k=k, which="SA" if E < 0 else "LA", return_eigenvectors=False, tol=1e-13)
    best = float(w[np.argmin(np.abs(w - E))])
    if abs(best - E) > 1e-6:
        best = float(eigsh(H, k=1, sigma=E, which="LM", return_eigenvectors=False)[0])
    return best, R


def _bs_eigs(d, V, E):
    K = bs_matrix(d, V, SpectralPoint(E), method="laplace").entries.real
    M = np.eye(V.size) + K
    if V.sign_definite() != 0:
        return np.linalg.eigvalsh((M + M.T) / 2)
    return np.array([np.linalg.det(M)])


def bound_states(d: int, V: Potential, n_grid: int = 240, tiny: float = 1e-13,
                 dense_tol: float = 1e-8, max_sites: int = 2_000_000) -> list:
    """Eigenvalues of ``H0 + V`` outside ``[0, 4d]`` from the Birman-Schwinger condition.

    For sign-definite ``V`` the sorted eigenvalues of the symmetric
    ``I + K(E)`` are monotone in ``E`` outside the band and each root of
    each branch is a bound state (multiplicity included).  Indefinite
    ``V`` falls back to sign changes of ``det(I + K(E))`` on a grid
    (simple roots only; noted on each result).  Every energy is
    cross-checked by :func:`dense_eigenvalue` when the Dirichlet box it
    needs fits in ``max_sites``; otherwise (in practice: energies very
    close to the band edge) the result is returned unverified.
    """
    if V.size == 0:
        return []
    vmin, vmax = float(V.values.min()), float(V.values.max())
    sd = V.sign_definite()
    windows = []
    if vmin < 0:
        windows.append((vmin - 1.0, -tiny))
    if vmax > 0:
        windows.append((4 * d + tiny, 4 * d + vmax + 1.0))
    out = []
    for a, b in windows:
        # the band edge end of each window is where K is largest
        edge = b if b < 0 else a
        far = a if b < 0 else b
        grid = edge + (far - edge) * np.geomspace(1e-14, 1.0, n_grid)
        grid = np.sort(np.r_[edge, grid[1:]])
        vals = np.array([_bs_eigs(d, V, E) for E in grid])
        for i in range(vals.shape[1]):
            f = vals[:, i]
            for j in np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]:
                root = optimize.brentq(lambda E: _bs_eigs(d, V, E)[i], grid[j], grid[j + 1],
                                       xtol=1e-14, rtol=1e-14)
                out.append(_verify(d, V, root, tiny, dense_tol, max_sites,
                                   "" if sd else "indefinite V: det bracketing"))
    return sorted(out, key=lambda s: s.energy)


def _verify(d, V, E, tiny, tol, max_sites, note):
    ev, R = dense_eigenvalue(d, V, E, tol, max_sites)
    if ev is None:
        return BoundState(E, None, False, (note + "; " if note else "") + f"dense box R={R} too large")
    return BoundState(E, ev, abs(ev - E) < 1e-6, note)


def bound_state_vectors(d: int, V: Potential, E: float, box: LatticeBox, null_tol: float = 1e-8):
    """Normalized eigenvectors of ``H0 + V`` at the bound-state energy ``E`` on ``box``.

    ``psi = R0(E) W2 a`` for ``a`` in the kernel of ``I + K(E)``.  The
    norm is exact on ``Z^d``: ``||psi||^2 = (W2 a)^* dR0/dE (W2 a)``, with
    ``dR0/dE`` from the Laplace integral.  Returns the vectors and,
    for each, the fraction of its mass that falls outside ``box``.
    """
    M = bs_matrix(d, V, SpectralPoint(E), method="laplace").identity_plus()
    _, sv, Vh = np.linalg.svd(M)
    null = Vh[sv < null_tol * max(1.0, sv.max())].conj()
    if null.shape[0] == 0:
        raise ConfigError(f"I + K(E) is not singular at E = {E}")
    uniq, inv = _displacements(V)
    dG = greens.green_laplace(d, uniq, E, derivative=True)[inv]
    X = box.coords()
    G = np.stack([greens.green_points(d, X - s, E, method="auto").real for s in V.sites], axis=1)
    out, lost = [], []
    # orthonormalize through the exact Gram matrix
    B = (V.W2[:, None] * null.T)
    gram = B.conj().T @ dG @ B
    w, U = np.linalg.eigh((gram + gram.conj().T) / 2)
    for j in range(len(w)):
        c = B @ U[:, j] / np.sqrt(w[j])
        psi = G @ c
        out.append(LatticeFunction(box, psi.reshape(box.shape)))
        lost.append(max(0.0, 1.0 - float(np.vdot(psi, psi).real)))
    return out, lost


# ---------------------------------------------------------------- Hoelder fit

def holder_fit(d: int, V: Potential, lambda0: float, sign: int = 1, separations=None,
               method: str = "auto", max_residual: float = 0.2) -> DecayFit:
    """Fit ``||K(lambda0 + s + sign*i0) - K(lambda0 + sign*i0)||_2 ~ C s^beta``.

    Returns the fit with ``exponent = beta`` (growth convention).
    """
    s = np.geomspace(1e-3, 1e-1, 9) if separations is None else np.asarray(separations, float)
    K0 = bs_matrix(d, V, SpectralPoint(lambda0, 0.0, sign), method=method).entries
    diffs = np.array([np.linalg.norm(bs_matrix(d, V, SpectralPoint(lambda0 + h, 0.0, sign), method=method).entries - K0, 2)
                      for h in s])
    return fit_power_law(s, diffs, growth=True, max_residual=max_residual)


# ---------------------------------------------------------------- sigma_BS scan

def _smin_and_norm(d, V, lam, sign, method):
    M = bs_matrix(d, V, SpectralPoint(lam, 0.0, sign), method=method)
    return M.min_singular(), M.norm()


def bs_scan(d: int, V: Potential, lams, sign: int = 1, threshold: float = 1e-3,
            refine_levels: int = 2, refine_factor: int = 8, trigger: float = 0.25,
            method: str = "auto") -> ScanResult:
    """Scan ``sigma_min(I + K(lam + sign*i0))`` over ``lams``.

    Every grid-local minimum below ``trigger`` is refined ``refine_levels``
    times (spacing divided by ``refine_factor`` each level, over one
    coarse cell on either side), then minimized by a bounded scalar
    search.  A dip is recorded when that minimum is below ``threshold``;
    its ``width`` is the extent of refined points below ``threshold``.
    """
    lams = np.sort(np.asarray(lams, float))
    res = [_smin_and_norm(d, V, l, sign, method) for l in lams]
    smin = np.array([r[0] for r in res])
    out = ScanResult(lams, smin, sign, threshold, float(max(r[1] for r in res)))
    loc = [i for i in range(len(lams))
           if smin[i] < trigger
           and (i == 0 or smin[i] <= smin[i - 1])
           and (i == len(lams) - 1 or smin[i] <= smin[i + 1])]
    for i in loc:
        h = (lams[min(i + 1, len(lams) - 1)] - lams[max(i - 1, 0)]) / 2
        c = lams[i]
        levels = []
        for _ in range(refine_levels):
            g = np.linspace(c - h, c + h, 2 * refine_factor + 1)
            v = np.array([_smin_and_norm(d, V, l, sign, method)[0] for l in g])
            levels.append((g, v))
            c = g[int(np.argmin(v))]
            h = h / refine_factor
        opt = optimize.minimize_scalar(lambda l: _smin_and_norm(d, V, l, sign, method)[0],
                                       bounds=(c - h, c + h), method="bounded",
                                       options={"xatol": 1e-12})
        g, v = levels[-1]
        below = g[v < threshold]
        width = float(below.max() - below.min()) if below.size else 0.0
        rec = {"lam": float(opt.x), "smin": float(opt.fun), "coarse_index": i,
               "level_minima": [float(v.min()) for _, v in levels], "width": width}
        out.refinements.append(rec)
        if opt.fun < threshold:
            out.dips.append(rec)
    return out
