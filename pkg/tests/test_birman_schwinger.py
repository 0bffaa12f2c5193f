import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lapbox import greens
from lapbox.birman_schwinger import (
    bound_state_vectors, bound_states, bs_matrix, bs_scan, dense_eigenvalue, holder_fit,
)
from lapbox.errors import ConfigError
from lapbox.lattice import LatticeBox, h0_stencil
from lapbox.potential import Potential
from lapbox.resolvent import SpectralPoint


# ---------------------------------------------------------------- potential

def test_potential_factorization():
    V = Potential(2, [(0, 0), (1, 0), (0, 2)], [-1.5, 0.25, 3.0])
    np.testing.assert_allclose(V.W1 * V.W2, V.values)
    assert np.all(V.W2 >= 0)
    assert V.sign_definite() == 0
    assert Potential.single_site(2, -1.0).sign_definite() == -1
    assert Potential.single_site(2, 2.0).sign_definite() == 1
    assert V.sup_norm() == 3.0
    assert V.lp_norm(1) == pytest.approx(4.75)
    assert V.extent() == 2


def test_potential_validation():
    with pytest.raises(ConfigError):
        Potential(1, [(0,), (0,)], [1.0, 2.0])
    with pytest.raises(ConfigError):
        Potential(1, [(0,)], [np.nan])
    with pytest.raises(ConfigError):
        Potential(1, [(0,), (1,)], [1.0])


def test_potential_drops_subthreshold_values():
    V = Potential(1, [(0,), (1,)], [1.0, 1e-14])
    assert V.size == 1


def test_potential_placement():
    V = Potential(2, [(0, 0), (-1, 2)], [1.0, -2.0])
    T = V.on_torus(8)
    assert T[0, 0] == 1.0 and T[7, 2] == -2.0
    f = V.on_box(LatticeBox(2, 2))
    assert f.values[2, 2] == 1.0 and f.values[1, 4] == -2.0
    with pytest.raises(ConfigError):
        V.on_torus(4)
    with pytest.raises(ConfigError):
        V.on_box(LatticeBox(2, 1))


def test_from_function_records_truncation():
    V = Potential.from_function(1, lambda x: np.exp(-3.0 * np.abs(x[:, 0])), R=20, threshold=1e-6)
    assert V.extent() == 4
    assert V.discarded_l2 > 0
    assert V.discarded_l2 < 1e-6 * np.sqrt(2 * 20)


# ---------------------------------------------------------------- K(z)

def test_zero_potential_gives_empty_matrix():
    K = bs_matrix(3, Potential.zero(3), SpectralPoint(-1.0))
    assert K.size == 0
    assert K.norm() == 0.0
    assert K.min_singular() == 1.0
    assert bound_states(3, Potential.zero(3)) == []


def test_single_site_is_scaled_green():
    z = SpectralPoint(1.0, 0.0, 1)
    K = bs_matrix(3, Potential.single_site(3, 0.7), z)
    g = greens.green_points(3, np.zeros((1, 3), int), 1.0, 0.0, 1)[0]
    assert K.entries[0, 0] == pytest.approx(0.7 * g, rel=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ConfigError):
        bs_matrix(2, Potential.single_site(3, 1.0), SpectralPoint(-1.0))


def test_hermitian_below_spectrum_for_nonnegative_V():
    V = Potential(3, [(0, 0, 0), (1, 0, 0), (0, 1, 1)], [0.5, 1.0, 2.0])
    K = bs_matrix(3, V, SpectralPoint(-0.5)).entries
    np.testing.assert_allclose(K, K.conj().T, atol=1e-14)


def test_boundary_conjugation():
    V = Potential(2, [(0, 0), (1, 1), (2, 0)], [0.5, -1.0, 0.3])
    Kp = bs_matrix(2, V, SpectralPoint(2.5, 0.0, 1)).entries
    Km = bs_matrix(2, V, SpectralPoint(2.5, 0.0, -1)).entries
    np.testing.assert_allclose(Km, Kp.conj(), atol=1e-12)


def test_truncation_stability():
    def fn(x):
        return 0.5 * np.exp(-2.0 * np.abs(x).sum(axis=1))

    z = SpectralPoint(-1.0)
    norms = [bs_matrix(2, Potential.from_function(2, fn, R, threshold=t), z).norm()
             for R, t in ((3, 1e-3), (6, 1e-6))]
    assert abs(norms[0] - norms[1]) < 0.01 * norms[1]


# ---------------------------------------------------------------- bound states

def test_single_attractive_site_1d():
    V = Potential.single_site(1, -1.0)
    (bs,) = bound_states(1, V)
    assert bs.energy == pytest.approx(2 - np.sqrt(5), abs=1e-10)
    assert bs.verified
    # dense tridiagonal check, independent of the solver
    ev, _ = dense_eigenvalue(1, V, bs.energy)
    assert ev == pytest.approx(2 - np.sqrt(5), abs=1e-9)


def test_repulsive_site_above_band_1d():
    (bs,) = bound_states(1, Potential.single_site(1, 1.0))
    assert bs.energy == pytest.approx(2 + np.sqrt(5), abs=1e-10)


def test_doubling_strength_lowers_energy():
    V = Potential(2, [(0, 0), (1, 0)], [-1.5, -1.5])
    e1 = bound_states(2, V)[0].energy
    e2 = bound_states(2, V.scaled(2.0))[0].energy
    assert e2 < e1 < 0


def test_weak_3d_potential_has_no_bound_state():
    # -0.5 delta is below the 3D threshold 1/G(0;0) ~ 3.96
    assert bound_states(3, Potential.single_site(3, -0.5)) == []


def test_indefinite_potential():
    V = Potential(1, [(0,), (3,)], [-2.0, 2.0])
    out = bound_states(1, V)
    assert len(out) == 2
    assert out[0].energy < 0 < 4 < out[1].energy
    assert all(s.verified for s in out)
    assert all("indefinite" in s.note for s in out)


def test_bound_state_vectors_solve_eigen_equation():
    V = Potential(2, [(0, 0), (1, 0)], [-2.0, -1.0])
    E = bound_states(2, V)[0].energy
    box = LatticeBox(2, 24)
    (psi,), (lost,) = bound_state_vectors(2, V, E, box)
    assert lost < 1e-7
    # the norm on Z^d is exact, so box mass plus lost mass is one
    assert np.linalg.norm(psi.values) ** 2 + lost == pytest.approx(1.0, abs=1e-12)
    Hpsi = h0_stencil(psi.values) + V.on_box(box).values * psi.values
    inner = (slice(2, -2),) * 2
    np.testing.assert_allclose(Hpsi[inner], E * psi.values[inner], atol=1e-10)


def test_bound_state_vectors_reject_regular_point():
    with pytest.raises(ConfigError):
        bound_state_vectors(1, Potential.single_site(1, -1.0), -1.0, LatticeBox(1, 5))


# ---------------------------------------------------------------- Hoelder

def test_holder_zero_separation():
    V = Potential.single_site(3, 1.0)
    f = holder_fit(3, V, 1.0, separations=np.geomspace(1e-3, 1e-1, 5))
    K0 = bs_matrix(3, V, SpectralPoint(1.0, 0.0, 1)).entries
    assert np.linalg.norm(K0 - bs_matrix(3, V, SpectralPoint(1.0, 0.0, 1)).entries) == 0.0
    assert f.exponent > 0


def test_holder_exponent_4d():
    f = holder_fit(4, Potential.single_site(4, -1.0), 2.0)
    assert f.exponent >= 0.9


# ---------------------------------------------------------------- scan

def test_scan_zero_potential():
    res = bs_scan(2, Potential.zero(2), np.linspace(0.1, 7.9, 9))
    np.testing.assert_array_equal(res.smin, 1.0)
    assert res.dips == []


def test_scan_weak_potential_neumann():
    V = Potential(3, [(0, 0, 0), (1, 0, 0), (0, 1, 0)], [0.3, 0.3, 0.3])
    res = bs_scan(3, V, np.linspace(0.05, 11.95, 25))
    assert res.sup_norm < 1
    assert res.smin.min() >= 1 - res.sup_norm - 1e-12
    assert res.dips == []


def test_scan_strong_potential_isolated_dip():
    V = Potential.single_site(3, -6.0)
    res = bs_scan(3, V, np.linspace(-1.5, -0.05, 30))
    assert len(res.dips) == 1
    dip = res.dips[0]
    assert dip["width"] < 0.05
    (bs,) = bound_states(3, V)
    assert dip["lam"] == pytest.approx(bs.energy, abs=1e-6)


@settings(max_examples=15)
@given(st.floats(-3.0, -0.2), st.floats(0.1, 2.0))
def test_single_site_1d_energy_formula(v, scale):
    # 1 + v G(0;E) = 0 with G(0;E) = 1/sqrt(E(E-4)) gives E = 2 - sqrt(4 + v^2)
    (bs,) = bound_states(1, Potential.single_site(1, v * scale))
    w = v * scale
    assert bs.energy == pytest.approx(2 - np.sqrt(4 + w * w), abs=1e-9)
