import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lapbox.errors import ConfigError, FitRejected, MeshConditionError
from lapbox.lattice import DualGrid, LatticeBox, LatticeFunction, h0_stencil
from lapbox.resolvent import (
    QuadratureSpec,
    SpectralPoint,
    green_kernel,
    green_kernel_box,
    kernel_decay_fit,
    limiting_absorption,
    resolvent_apply,
    resolvent_torus,
    richardson,
)


def closed_1d(x, z):
    """r^|x| / (1/r - r) with r + 1/r = 2 - z and |r| < 1."""
    r = np.roots([1, -(2 - z), 1])
    r = r[np.argmin(np.abs(r))]
    return r ** abs(x) / (1 / r - r)


def test_spectral_point_validation():
    assert SpectralPoint(1.0, 0.5, -1).z == 1 - 0.5j
    with pytest.raises(ConfigError):
        SpectralPoint(1.0, -0.1)
    with pytest.raises(ConfigError):
        SpectralPoint(1.0, 0.1, 0)


def test_quadrature_spec_validation():
    with pytest.raises(ConfigError):
        QuadratureSpec(N=1001)
    with pytest.raises(ConfigError):
        QuadratureSpec(eps_schedule=(1e-3, 2e-3))
    with pytest.raises(MeshConditionError):
        QuadratureSpec(N=1024, eps_schedule=(1e-2, 1e-3))


def test_green_kernel_z_minus_one():
    quad = QuadratureSpec(N=4096, eps_schedule=())
    for x in range(21):
        assert abs(green_kernel(1, (x,), SpectralPoint(-1.0), quad) - closed_1d(x, -1.0)) < 1e-8
    assert green_kernel(1, (0,), SpectralPoint(-1.0), quad) == pytest.approx(0.4472136, abs=1e-7)


def test_green_kernel_real_below_spectrum_and_even():
    quad = QuadratureSpec(N=256, eps_schedule=())
    z = SpectralPoint(-0.8)
    for x in [(1, 2), (3, -1)]:
        g = green_kernel(2, x, z, quad)
        assert abs(g.imag) < 1e-10
        assert g == pytest.approx(green_kernel(2, tuple(-np.array(x)), z, quad), abs=1e-12)


def test_green_kernel_error_estimate_and_mesh_rule():
    quad = QuadratureSpec(N=2048, eps_schedule=())
    val, err = green_kernel(1, (3,), SpectralPoint(2.0, 0.1), quad, return_error=True)
    assert abs(val - closed_1d(3, 2.0 + 0.1j)) <= max(err, 1e-13)
    with pytest.raises(MeshConditionError):
        green_kernel(1, (0,), SpectralPoint(2.0, 1e-3), QuadratureSpec(N=256, eps_schedule=()))
    with pytest.raises(ConfigError):
        green_kernel(1, (0,), SpectralPoint(2.0, 0.0), quad)


def test_richardson_exact_on_quadratic():
    h = np.array([1.0, 0.5, 0.25])
    best, inc = richardson(3 + 2 * h + 5 * h**2, 2.0, 2)
    assert best == pytest.approx(3.0)


@pytest.mark.parametrize("lam", [1.0, 2.0, 3.0])
def test_limiting_absorption_d1(lam):
    lv = limiting_absorption(1, (0,), lam, 1, QuadratureSpec())
    theta = np.arccos(1 - lam / 2)
    ref = 1 / (-2j * np.sin(theta))
    assert abs(lv.value - ref) < 1e-8
    assert lv.value.imag > 0 and not lv.diverged
    lm = limiting_absorption(1, (0,), lam, -1, QuadratureSpec())
    assert abs(lm.value - np.conj(lv.value)) < 1e-10


def test_limiting_absorption_rejects_outside_band():
    with pytest.raises(ConfigError):
        limiting_absorption(1, (0,), 4.5, 1, QuadratureSpec())


def test_resolvent_norm_bound(rng):
    for d in (1, 2, 3):
        grid = DualGrid(d, 32)
        f = LatticeFunction.random(LatticeBox(d, 15), rng)
        u = resolvent_apply(d, SpectralPoint(1.5, 0.1), f, grid)
        assert np.linalg.norm(u.values) <= np.linalg.norm(f.values) / 0.1


def test_resolvent_identity_residual(rng):
    for d in (1, 2, 3):
        f = rng.standard_normal((64,) * d) + 0j
        z = 1.0 + 0.1j
        u = resolvent_torus(f, z)
        assert np.linalg.norm(h0_stencil(u) - z * u - f) / np.linalg.norm(f) <= 1e-10


def test_first_resolvent_identity(rng):
    f = rng.standard_normal((48, 48)) + 0j
    z, w = 1.0 + 0.3j, 2.5 - 0.2j
    lhs = resolvent_torus(f, z) - resolvent_torus(f, w)
    rhs = (z - w) * resolvent_torus(resolvent_torus(f, w), z)
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(lhs)


def test_delta_column_vs_green_kernel():
    d, N = 2, 128
    z = SpectralPoint(2.0, 0.5)
    box = LatticeBox(d, 4)
    col = resolvent_apply(d, z, LatticeFunction.delta(box), DualGrid(d, N))
    quad = QuadratureSpec(N=N, eps_schedule=())
    for x in [(0, 0), (2, -3), (4, 4)]:
        g, err = green_kernel(d, x, z, quad, return_error=True)
        assert abs(col(x) - g) <= max(err, 1e-12)


def test_green_kernel_box_parity():
    gk = green_kernel_box(2, 5, SpectralPoint(1.0, 0.05))
    v = gk.values
    assert np.allclose(v, v[::-1, ::-1], atol=1e-12)
    assert np.allclose(v, v.T, atol=1e-12)
    assert gk((0, 0)) == v[5, 5]


@given(st.floats(0.2, 3.8), st.floats(0.01, 1.0))
def test_green_kernel_conjugation_1d(lam, eps):
    quad = QuadratureSpec(N=4096, eps_schedule=())
    gp = green_kernel(1, (2,), SpectralPoint(lam, eps, 1), quad)
    gm = green_kernel(1, (2,), SpectralPoint(lam, eps, -1), quad)
    assert abs(gp - np.conj(gm)) < 1e-10


def test_decay_fit_rejected_off_spectrum():
    with pytest.raises(FitRejected):
        kernel_decay_fit(2, -1.0, window=(8, 64))


def test_decay_fit_rejects_critical_energy():
    with pytest.raises(ConfigError):
        kernel_decay_fit(2, 4.1, window=(8, 64))


def test_decay_fit_d2():
    fit = kernel_decay_fit(2, 1.0, window=(8, 64))
    assert 0.35 <= fit.exponent <= 0.65
    assert fit.window == (8, 64) or tuple(fit.window) == (8.0, 64.0)
