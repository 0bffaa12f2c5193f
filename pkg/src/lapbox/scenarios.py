"""Scenario runners: one function per scenario, each returning tables and pass/fail flags."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import greens
from .birman_schwinger import bound_states, bs_scan, holder_fit
from .errors import ConfigError
from .evolution import dispersive_decay_fit, free_kernel_1d, free_propagate, wrap_margin
from .lattice import LatticeBox, LatticeFunction, h0_stencil
from .opnorm import (
    ConvolutionOperator,
    dyadic_cutoff_check,
    fourier_slice_constants,
    opnorm_lower,
    pointwise_constant,
    riesz_thorin_check,
    slice_constants,
    spectral_norm,
    task_rng,
    triangle,
)
from .oscillatory import CutoffProfile, GammaSpec, gamma_bounds_scan, pv_fourier_identity
from .potential import Potential
from .resolvent import (
    QuadratureSpec,
    SpectralPoint,
    green_kernel,
    kernel_decay_fit,
    limiting_absorption,
    resolvent_torus,
)
from .scattering import WavePacket, completeness_diagnostic, intertwining_check, random_local_state, wave_apply
from .symbols import ExponentPair, beta_delta, in_region_Sk

__all__ = ["RUNNERS", "table"]


def table(columns, rows) -> dict:
    return {"columns": list(columns), "rows": [list(r) for r in rows]}


def _potential(d, sites, values) -> Potential:
    s = np.asarray(sites, dtype=np.int64).reshape(-1, d)
    return Potential(d, s, np.asarray(values, float).ravel())


def _axis_points(d, xs):
    if xs is None:
        xs = [(n,) + (0,) * (d - 1) for n in range(21)]
    return np.asarray(xs, dtype=np.int64).reshape(-1, d)


# ---------------------------------------------------------------- green

def run_green(P, seed):
    if P.check == "resolvent_identity":
        return _resolvent_identity(P, seed)
    xs = _axis_points(P.d, P.xs)
    z = SpectralPoint(P.lam, P.eps, P.sign)
    if P.method == "kernel":
        quad = QuadratureSpec(N=P.N, eps_schedule=())
        vals = np.array([green_kernel(P.d, x, z, quad) for x in xs])
    else:
        vals = greens.green_points(P.d, xs, P.lam, P.eps, P.sign, P.method, P.N)
    cols = ["x" + str(i) for i in range(P.d)] + ["value_re", "value_im"]
    rows = [list(map(int, x)) + [float(v.real), float(v.imag)] for x, v in zip(xs, vals)]
    flags, summary = {}, {}
    if P.check == "closed_form":
        if P.d != 1:
            raise ConfigError("closed_form check needs d = 1")
        ref = greens.green_1d(xs[:, 0], P.lam + 1j * P.sign * P.eps if P.eps else P.lam, P.sign)
        err = float(np.abs(vals - ref).max())
        summary["max_error"] = err
        flags["closed_form"] = err <= P.tol
        cols += ["closed_re", "closed_im"]
        rows = [r + [float(c.real), float(c.imag)] for r, c in zip(rows, ref)]
    elif P.check != "none":
        raise ConfigError(f"green: unknown check {P.check!r}")
    return {"values": table(cols, rows)}, summary, flags


def _resolvent_identity(P, seed):
    rows = []
    worst = 0.0
    z = complex(P.lam, P.sign * P.eps)
    if P.eps <= 0 and 0 <= P.lam <= 4 * max(P.dims):
        raise ConfigError("resolvent identity needs z off the spectrum")
    for d in P.dims:
        for i in range(P.trials):
            rng = task_rng(seed, 1000 * d + i)
            f = rng.standard_normal((P.grid,) * d) + 1j * rng.standard_normal((P.grid,) * d)
            u = resolvent_torus(f, z)
            r = float(np.linalg.norm(h0_stencil(u) - z * u - f) / np.linalg.norm(f))
            worst = max(worst, r)
            rows.append([d, i, r])
    return ({"residuals": table(["d", "trial", "relative_residual"], rows)},
            {"max_residual": worst}, {"resolvent_identity": worst <= P.tol})


# ---------------------------------------------------------------- lap

def run_lap(P, seed):
    quad = QuadratureSpec(N=P.N, eps_schedule=P.eps_schedule, richardson_order=P.richardson_order)
    x = np.asarray(P.x, dtype=np.int64)
    rows, worst = [], 0.0
    for lam in P.lams:
        lv = limiting_absorption(P.d, x, lam, P.sign, quad)
        ref = greens.green_1d(x[:1], lam, P.sign)[0] if P.d == 1 else greens.green_contour(P.d, x[None, :], lam, 0.0, P.sign)[0]
        err = abs(lv.value - ref)
        worst = max(worst, err)
        rows.append([lam, lv.value.real, lv.value.imag, ref.real, ref.imag, err, lv.residual, lv.diverged])
    cols = ["lam", "value_re", "value_im", "reference_re", "reference_im", "error", "residual", "diverged"]
    return {"boundary_values": table(cols, rows)}, {"max_error": worst}, {"lap": worst <= P.tol}


# ---------------------------------------------------------------- decay

def run_decay(P, seed):
    multi = not isinstance(P.d, (int, np.integer))
    ranges = P.k_range if multi and isinstance(P.k_range[0], (list, tuple)) else [P.k_range] * (len(P.d) if multi else 1)
    lams = P.lam if multi and isinstance(P.lam, (list, tuple)) else [P.lam] * (len(P.d) if multi else 1)
    dims = list(P.d) if multi else [P.d]
    if not len(dims) == len(lams) == len(ranges):
        raise ConfigError("decay: d, lam and k_range must have matching lengths")
    tables, summary, flags = {}, {}, {}
    cols = ["abs_x", "value_re", "value_im", "log_abs", "fit_exponent", "fit_residual"]
    for d, lam, (lo, hi) in zip(dims, lams, ranges):
        direction = P.direction or (1,) + (0,) * (d - 1)
        fit = kernel_decay_fit(d, lam, P.sign, direction, P.window, method=P.method,
                               margin=P.margin, max_residual=P.max_residual)
        rows = [[float(a), complex(v).real, complex(v).imag, float(np.log(abs(v))), fit.exponent, fit.rms_residual]
                for a, v in zip(fit.samples, fit.values)]
        tag = f"d{d}_lam{lam:g}" if multi else ""
        tables["decay_" + tag if tag else "decay"] = table(cols, rows)
        summary["exponent" + ("_" + tag if tag else "")] = fit.exponent
        summary["rms_residual" + ("_" + tag if tag else "")] = fit.rms_residual
        flags["exponent_in_range" + ("_" + tag if tag else "")] = bool(lo <= fit.exponent <= hi)
    return tables, summary, flags


# ---------------------------------------------------------------- dispersive

def bessel_errors(times, tol_margin=1e-14):
    """Max deviation of the FFT propagator from the Bessel closed forms (d = 1 and d = 2)."""
    rows = []
    for t in times:
        m = wrap_margin(t, tol_margin)
        L = int(np.ceil(2 * t)) + m
        box1 = LatticeBox(1, L)
        u1 = free_propagate(1, t, LatticeFunction.delta(LatticeBox(1, 1)), out_box=box1, margin=m).values
        ref1 = free_kernel_1d(t, np.arange(-L, L + 1))
        e1 = float(np.abs(u1 - ref1).max())
        box2 = LatticeBox(2, L)
        u2 = free_propagate(2, t, LatticeFunction.delta(LatticeBox(2, 1)), out_box=box2, margin=m).values
        e2 = float(np.abs(u2 - np.outer(ref1, ref1)).max())
        rows.append([t, m, e1, e2])
    return rows


def run_dispersive(P, seed):
    tables, summary, flags = {}, {}, {}
    if P.check in ("bessel", "both"):
        rows = bessel_errors(P.bessel_times, P.bessel_margin_tol)
        tables["bessel"] = table(["t", "margin", "error_d1", "error_d2_tensor"], rows)
        worst = max(max(r[2], r[3]) for r in rows)
        summary["bessel_max_error"] = worst
        flags["bessel"] = worst <= P.bessel_tol
    if P.check in ("exponent", "both"):
        multi = not isinstance(P.d, (int, np.integer))
        dims = list(P.d) if multi else [P.d]
        ranges = P.exponent_range if multi and isinstance(P.exponent_range[0], (list, tuple)) else [P.exponent_range] * len(dims)
        if len(ranges) != len(dims):
            raise ConfigError("dispersive: one exponent_range per dimension")
        for d, (lo, hi) in zip(dims, ranges):
            fit = dispersive_decay_fit(d, P.t_window, P.n_samples)
            tag = f"_d{d}" if multi else ""
            tables["sup_decay" + tag] = table(["t", "sup_abs", "fit_exponent", "fit_residual"],
                                              [[float(t), float(v), fit.exponent, fit.rms_residual]
                                               for t, v in zip(fit.samples, fit.values)])
            summary["exponent" + tag] = fit.exponent
            summary["rms_residual" + tag] = fit.rms_residual
            flags["exponent_in_range" + tag] = bool(lo <= fit.exponent <= hi)
    if not tables:
        raise ConfigError(f"dispersive: unknown check {P.check!r}")
    return tables, summary, flags


# ---------------------------------------------------------------- opnorm

def torus_multiplier_norm(d, N, z: complex) -> float:
    """``sup |h0(xi) - z|^{-1}`` over the grid ``(Z/N)^d``: the exact (2,2) norm of the periodic resolvent."""
    h1 = 4 * np.sin(np.pi * np.arange(N) / N) ** 2
    h = sum(h1.reshape([N if j == a else 1 for j in range(d)]) for a in range(d))
    return float(1.0 / np.abs(h - z).min())


def run_opnorm(P, seed):
    box = LatticeBox(P.d, P.L)
    rows = []
    for i, eps in enumerate(P.eps_list):
        ker = greens.green_box_values(P.d, 2 * P.L, P.lam, eps, 1, "contour")
        K = ConvolutionOperator(box, ker)
        est = opnorm_lower(K, P.p, P.q, restarts=P.restarts, seed=seed, max_iter=P.max_iter)
        s22 = spectral_norm(K, tol=1e-8)
        tor = torus_multiplier_norm(P.d, P.torus_N, complex(P.lam, eps))
        rows.append([eps, est.value, s22, tor, 1.0 / eps])
    v = np.array([r[1] for r in rows])
    change = float(v.max() / v.min() - 1)
    growth_torus = rows[-1][3] / rows[0][3]
    growth_box = rows[-1][2] / rows[0][2]
    cols = ["eps", "pq_lower_bound", "box_22_norm", "torus_22_norm", "inv_eps"]
    summary = {"pq_change": change, "torus_22_growth": growth_torus, "box_22_growth": growth_box}
    flags = {"pq_uniform": change <= P.change_max, "22_blowup": growth_torus >= P.blowup_min}
    return {"sweep": table(cols, rows)}, summary, flags


# ---------------------------------------------------------------- assumptions

def green_family(d, L, lams, k=1.0):
    box = LatticeBox(d, L)
    return [ConvolutionOperator(box, greens.green_box_values(d, 2 * L, lam, 0.0, 1, "contour")) for lam in lams]


def run_assumptions(P, seed):
    if P.check == "riesz_thorin":
        fam = green_family(P.d, P.L, P.lams)
        rep = riesz_thorin_check(fam, P.k, samples=P.samples, seed=seed, restarts=P.restarts)
        rows = [[P.lams[m], p, xd, yd, meas, bound, bool(v)] for m, p, xd, yd, meas, bound, v in rep["samples"]]
        cols = ["lam", "p", "x_d", "y_d", "measured", "bound", "violation"]
        return ({"samples": table(cols, rows)}, {"violations": rep["violations"], "max_ratio": rep["max_ratio"]},
                {"no_violations": rep["violations"] == 0})
    if P.check == "dyadic":
        K = green_family(P.d, P.dyadic_L, [P.lams[0]])[0] if P.dyadic_L else None
        rep = dyadic_cutoff_check(triangle, list(P.js), K, p=P.p, seed=seed)
        rows = [[r["j"], r["normalization"], r["max_error"], r["normalization_ok"]] for r in rep["identity"]]
        worst = max(r[2] for r in rows)
        tables = {"partition": table(["j", "normalization", "max_error", "normalization_ok"], rows)}
        flags = {"identity": worst <= P.identity_tol, "normalization": all(r[3] for r in rows)}
        summary = {"max_identity_error": worst}
        if K is not None:
            tables["conv_norms"] = table(["j", "p_to_2_lower_bound"], [[j, float(n)] for j, n in zip(P.js, rep["norms"])])
            summary["growth_exponent"] = rep["growth_exponent"]
            flags["growth"] = rep["growth_exponent"] <= P.growth_max
        return tables, summary, flags
    if P.check == "constants":
        rows = []
        for lam in P.lams:
            for L in (P.L, 2 * P.L):
                K = green_family(P.d, L, [lam])[0]
                s = slice_constants(K, P.k)
                f = fourier_slice_constants(K, P.k)
                rows.append([lam, L, s.C0, s.C1, f.C0, f.C3, pointwise_constant(K, P.k)])
        cols = ["lam", "L", "C0_slices", "C1", "C0_fourier", "C3_fourier", "C4"]
        return {"constants": table(cols, rows)}, {}, {}
    raise ConfigError(f"assumptions: unknown check {P.check!r}")


# ---------------------------------------------------------------- Birman-Schwinger

def run_bound_states(P, seed):
    V = _potential(P.d, P.V_sites, P.V_values)
    bs = bound_states(P.d, V)
    rows = [[b.energy, b.dense_energy, b.discrepancy, b.verified, b.note] for b in bs]
    flags = {"verified": all(b.verified and b.discrepancy <= P.tol for b in bs)}
    summary = {"count": len(bs)}
    if P.expected is not None:
        exp = np.atleast_1d(np.asarray(P.expected, float))
        ok = len(exp) == len(bs) and all(abs(b.energy - e) <= P.tol for b, e in zip(bs, np.sort(exp)))
        flags["matches_expected"] = bool(ok)
    cols = ["energy", "dense_energy", "discrepancy", "verified", "note"]
    return {"bound_states": table(cols, rows)}, summary, flags


def run_holder(P, seed):
    V = _potential(P.d, P.V_sites, P.V_values)
    a, b, n = P.separations
    seps = np.geomspace(a, b, int(n))
    fit = holder_fit(P.d, V, P.lambda0, P.sign, seps)
    target = beta_delta(P.p, P.delta)
    rows = [[float(s), float(v), fit.exponent, fit.rms_residual] for s, v in zip(fit.samples, fit.values)]
    return ({"holder": table(["separation", "norm_difference", "fit_exponent", "fit_residual"], rows)},
            {"exponent": fit.exponent, "beta_target": target},
            {"exponent_min": fit.exponent >= P.min_exponent, "beta_target": fit.exponent >= target - 0.1})


def run_bs_scan(P, seed):
    lams = np.concatenate([np.linspace(a, b, int(n)) for a, b, n in P.lam_ranges])
    weak = _potential(P.d, P.weak_sites, P.weak_values)
    strong = _potential(P.d, P.strong_sites, P.strong_values)
    rw = bs_scan(P.d, weak, lams, P.sign, P.threshold, P.refine_levels)
    rs = bs_scan(P.d, strong, lams, P.sign, P.threshold, P.refine_levels)
    grid = table(["lam", "smin_weak", "smin_strong"], [[float(l), float(a), float(b)] for l, a, b in zip(rw.lams, rw.smin, rs.smin)])
    dips = table(["lam", "smin", "width", "level1_min", "level2_min"],
                 [[d["lam"], d["smin"], d["width"]] + d["level_minima"][:2] for d in rs.dips])
    bounds = [b.energy for b in bound_states(P.d, strong)]
    in_grid = [e for e in bounds if lams.min() <= e <= lams.max()]
    matched = all(any(abs(d["lam"] - e) < 1e-6 for d in rs.dips) for e in in_grid)
    persist = all(all(m < 0.25 for m in d["level_minima"]) for d in rs.dips)
    flags = {
        "weak_neumann": rw.sup_norm < 1 and float(rw.smin.min()) >= 1 - rw.sup_norm - 1e-12,
        "weak_no_dips": float(rw.smin.min()) >= P.weak_floor and not rw.dips,
        "strong_has_dips": len(rs.dips) > 0,
        "strong_isolated": all(d["width"] <= P.max_dip_width for d in rs.dips),
        "strong_persist": persist,
        "dips_are_bound_states": matched,
    }
    summary = {"weak_sup_norm": rw.sup_norm, "weak_min_smin": float(rw.smin.min()),
               "n_dips": len(rs.dips), "bound_state_energies": bounds}
    return {"scan": grid, "dips": dips}, summary, flags


# ---------------------------------------------------------------- scattering

def run_wave(P, seed):
    V = _potential(P.d, P.V_sites, P.V_values)
    pk = WavePacket.gaussian(P.d, P.xi0, P.sigma, P.radius)
    tr = wave_apply(P.d, V, pk, P.t_schedule, tol=P.tol)
    inc = tr.increments
    ratios = inc[:-1] / inc[1:] if len(inc) > 1 else np.array([])
    res = intertwining_check(P.d, V, pk, P.intertwine_t, P.intertwine_s, tol=P.tol)
    phi = random_local_state(P.d, P.phi_radius, task_rng(seed, 0))
    ts = np.arange(0.0, P.complete_T + P.complete_dt / 2, P.complete_dt)
    cd = completeness_diagnostic(P.d, V, phi, ts, P.complete_R, tol=P.tol)
    tables = {
        "increments": table(["t_from", "t_to", "increment"],
                            [[float(a), float(b), float(c)] for a, b, c in zip(tr.t_schedule[:-1], tr.t_schedule[1:], inc)]),
        "local_mass": table(["t", "local_mass", "time_average"],
                            [[float(t), float(m), float(a)] for t, m, a in zip(cd["t"], cd["local_mass"], cd["time_average"])]),
    }
    summary = {"intertwining_residual": res, "increment_ratios": [float(r) for r in ratios],
               "norm_defect": float(np.abs(tr.norms - 1).max()), "mass_outside_window": pk.mass_outside(),
               "time_average_final": float(cd["time_average"][-1]), "removed_mass": cd["removed_mass"],
               "bound_energies": cd["bound_energies"]}
    flags = {
        "intertwining": res <= P.intertwine_tol,
        "cauchy_halving": bool(np.all(ratios >= P.halving)),
        "unit_norm": summary["norm_defect"] <= 1e-10,
        "window": summary["mass_outside_window"] < 1e-8,
        "completeness": summary["time_average_final"] <= P.complete_avg_max,
    }
    return tables, summary, flags


def run_complete(P, seed):
    V = _potential(P.d, P.V_sites, P.V_values)
    ts = np.arange(0.0, P.T + P.dt / 2, P.dt)
    if P.phi == "random":
        phi = random_local_state(P.d, P.phi_radius, task_rng(seed, 0))
        cd = completeness_diagnostic(P.d, V, phi, ts, P.R, tol=P.tol)
        ok = float(cd["time_average"][-1]) <= P.avg_max
    elif P.phi == "bound":
        from .birman_schwinger import bound_state_vectors

        bs = bound_states(P.d, V)
        if not bs:
            raise ConfigError("phi = bound needs a potential with a bound state")
        vecs, _ = bound_state_vectors(P.d, V, bs[0].energy, LatticeBox(P.d, 3 * P.phi_radius))
        cd = completeness_diagnostic(P.d, V, vecs[0], ts, P.R, remove_bound_states=False, tol=P.tol)
        ok = float(cd["time_average"][-1]) >= 1 - P.avg_max
    else:
        raise ConfigError(f"complete: unknown phi {P.phi!r}")
    rows = [[float(t), float(m), float(a)] for t, m, a in zip(cd["t"], cd["local_mass"], cd["time_average"])]
    return ({"local_mass": table(["t", "local_mass", "time_average"], rows)},
            {"time_average_final": float(cd["time_average"][-1]), "removed_mass": cd["removed_mass"]},
            {"diagnostic": bool(ok)})


# ---------------------------------------------------------------- gamma

def run_gamma(P, seed):
    c = P.b_coef
    spec = GammaSpec(chi=CutoffProfile(P.plateau, P.support, P.order), b=lambda s: 1.0 + c * np.asarray(s) ** 2)
    a, b, n = P.separations
    rep = gamma_bounds_scan(spec, P.lam, P.sign, P.eps_grid, P.x_grid, np.geomspace(a, b, int(n)))
    pv = pv_fourier_identity(P.xi, P.mu)
    rows = [[float(x), float(s), float(pf)] for x, s, pf in zip(rep["x_grid"], rep["slopes"], rep["prefactors"])]
    summary = {"pv_error": pv["error_vs_pi"], "sup": rep["sup"], "sup_change": rep["sup_change"],
               "min_slope": float(rep["slopes"].min()), "prefactor_growth": rep["prefactor_growth"],
               "interpolation_violations": {str(k): v for k, v in rep["interpolation_violations"].items()}}
    flags = {
        "pv_identity": pv["error_vs_pi"] <= P.pv_tol,
        "sup_stable": rep["sup_change"] < P.sup_change_max,
        "holder_slope": summary["min_slope"] >= P.slope_min,
        "prefactor_growth": rep["prefactor_growth"] <= P.growth_max,
        "interpolated_bound": all(v == 0 for v in rep["interpolation_violations"].values()),
    }
    return {"holder": table(["x_d", "slope", "prefactor"], rows)}, summary, flags


# ---------------------------------------------------------------- region

def run_region(P, seed):
    conv = (lambda v: Fraction(str(v))) if P.exact else float
    k = conv(P.k)
    rows = []
    for ip, iq in P.pairs:
        pair = ExponentPair(conv(ip), conv(iq))
        rows.append([float(ip), float(iq), bool(in_region_Sk(pair, k, exact=P.exact))])
    return {"membership": table(["inv_p", "inv_q", "in_S_k"], rows)}, {"k": float(k)}, {}


RUNNERS = {
    "green": run_green,
    "lap": run_lap,
    "decay": run_decay,
    "dispersive": run_dispersive,
    "opnorm": run_opnorm,
    "assumptions": run_assumptions,
    "bs-scan": run_bs_scan,
    "bound-states": run_bound_states,
    "holder": run_holder,
    "wave": run_wave,
    "complete": run_complete,
    "gamma": run_gamma,
    "region": run_region,
}
