import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lapbox.errors import AliasingError, ConfigError
from lapbox.lattice import (
    DualGrid,
    LatticeBox,
    LatticeFunction,
    besov_norm,
    dft,
    from_torus,
    h0_stencil,
    idft,
    lp_norm,
    to_torus,
)


def test_box_cardinality_and_roundtrip():
    box = LatticeBox(3, 2)
    assert box.size == 125
    idx = np.arange(box.size)
    assert np.array_equal(box.index(box.point(idx)), idx)
    assert box.index(np.zeros(3, int)) == box.size // 2


@pytest.mark.parametrize("d, L", [(0, 1), (2, 0), (1.5, 2)])
def test_box_rejects_bad_shape(d, L):
    with pytest.raises(ConfigError):
        LatticeBox(d, L)


def test_lp_norm_examples():
    box = LatticeBox(2, 3)
    f = LatticeFunction.delta(box)
    for p in (1, 1.5, 2, 7, np.inf):
        assert lp_norm(f, p) == pytest.approx(1.0)
    g = f + LatticeFunction.delta(box, (1, -2))
    assert lp_norm(g, 2) == pytest.approx(np.sqrt(2))
    with pytest.raises(ConfigError):
        lp_norm(f, 0.5)


def test_lp_norm_large_p_is_stable():
    box = LatticeBox(1, 4)
    f = LatticeFunction(box, np.full(box.shape, 1e200))
    assert lp_norm(f, 400) == pytest.approx(1e200 * 9 ** (1 / 400))


@given(st.integers(0, 2**32 - 1), st.floats(1, 6), st.floats(1, 6))
def test_lp_nesting(seed, p, q):
    p, q = min(p, q), max(p, q)
    f = LatticeFunction.random(LatticeBox(3, 2), np.random.default_rng(seed))
    assert lp_norm(f, q) <= lp_norm(f, p) * (1 + 1e-12)
    assert lp_norm(f, np.inf) <= lp_norm(f, q) * (1 + 1e-12)


def test_besov_examples():
    box = LatticeBox(2, 8)
    f = LatticeFunction.delta(box)
    assert besov_norm(f, "B") == pytest.approx(1.0)
    assert besov_norm(f, "Bstar") == pytest.approx(1.0)
    # unit mass on |x| = 3, inside the shell 2 <= |x| < 4
    g = LatticeFunction.delta(box, (3, 0))
    assert besov_norm(g, "B") == pytest.approx(2.0)
    assert besov_norm(g, "Bstar") == pytest.approx(0.5)


def test_besov_unit_sphere_counts_twice():
    # |x| = 1 lies in the unit ball and in the first shell, as the definition reads
    g = LatticeFunction.delta(LatticeBox(2, 4), (1, 0))
    assert besov_norm(g, "B") == pytest.approx(1 + np.sqrt(2))


@given(st.integers(0, 2**32 - 1))
def test_besov_star_below_b(seed):
    f = LatticeFunction.random(LatticeBox(2, 9), np.random.default_rng(seed))
    assert besov_norm(f, "Bstar") <= besov_norm(f, "B")


def test_dft_delta_and_roundtrip(rng):
    box = LatticeBox(2, 8)
    grid = DualGrid(2, 32)
    assert np.allclose(dft(LatticeFunction.delta(box), grid), 1.0)
    f = LatticeFunction.random(box, rng)
    fh = dft(f, grid)
    back = idft(fh, grid, box)
    assert np.abs(back.values - f.values).max() <= 1e-12 * np.abs(f.values).max()
    parseval = abs(np.sum(np.abs(f.values) ** 2) - np.sum(np.abs(fh) ** 2) / grid.N**2)
    assert parseval <= 1e-12 * np.sum(np.abs(f.values) ** 2)


def test_dft_sign_convention():
    box = LatticeBox(1, 2)
    grid = DualGrid(1, 8)
    fh = dft(LatticeFunction.delta(box, (1,)), grid)
    assert np.allclose(fh, np.exp(-2j * np.pi * grid.nodes()))


def test_aliasing_rejected():
    with pytest.raises(AliasingError):
        dft(LatticeFunction.delta(LatticeBox(1, 8)), DualGrid(1, 16))
    with pytest.raises(ConfigError):
        DualGrid(2, 15)


def test_stencil_has_symbol_h0(rng):
    N = 16
    u = rng.standard_normal((N, N))
    h1 = 4 * np.sin(np.pi * np.arange(N) / N) ** 2
    ref = np.fft.ifft2((h1[:, None] + h1[None, :]) * np.fft.fft2(u)).real
    assert np.allclose(h0_stencil(u), ref, atol=1e-12)


def test_torus_embedding_roundtrip(rng):
    box = LatticeBox(3, 3)
    f = LatticeFunction.random(box, rng)
    u = to_torus(f, DualGrid(3, 8))
    assert np.array_equal(from_torus(u, box).values, f.values)
    assert np.count_nonzero(u) == box.size


def test_restrict_extend():
    box = LatticeBox(2, 2)
    f = LatticeFunction.delta(box, (1, 1))
    big = f.extend(LatticeBox(2, 5))
    assert big((1, 1)) == 1 and abs(big.values).sum() == 1
    assert np.array_equal(big.restrict(box).values, f.values)
