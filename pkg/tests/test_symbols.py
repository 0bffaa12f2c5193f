from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lapbox.errors import ConfigError
from lapbox.symbols import (
    ExponentPair,
    HolderSpec,
    beta_delta,
    critical_values,
    curvature_window,
    discrete_exponents,
    duality_line_pmax,
    h0_eval,
    h0_grad,
    in_region_Sk,
)


def test_h0_examples():
    assert h0_eval(3, np.zeros(3)) == 0
    for d in (1, 2, 5):
        assert h0_eval(d, np.full(d, 0.5)) == pytest.approx(4 * d)
    assert h0_eval(2, [0.25, 0.0]) == pytest.approx(2.0)


def test_critical_values():
    assert critical_values(1) == [0, 4]
    assert critical_values(4) == [0, 4, 8, 12, 16]


@pytest.mark.parametrize("d", [1, 2, 3])
def test_corners_are_critical(d):
    corners = np.array(np.meshgrid(*([[0.0, 0.5]] * d))).reshape(d, -1).T
    assert np.allclose(h0_grad(d, corners), 0, atol=1e-12)
    for h in h0_eval(d, corners):
        assert min(abs(h - c) for c in critical_values(d)) < 1e-12


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.permutations(range(3)))
def test_h0_symmetries(xi, perm):
    xi = np.array(xi)
    assert 0 <= h0_eval(3, xi) <= 12
    assert h0_eval(3, -xi) == pytest.approx(h0_eval(3, xi))
    assert h0_eval(3, xi[list(perm)]) == pytest.approx(h0_eval(3, xi))
    assert np.allclose(h0_grad(3, -xi), -h0_grad(3, xi))


def test_region_examples():
    for k in (0.1, 1, 7.5):
        assert in_region_Sk(ExponentPair(1, 0), k)
        assert not in_region_Sk(ExponentPair(0.5, 0.5), k)
    assert in_region_Sk(ExponentPair(Fraction(7, 10), Fraction(3, 10)), Fraction(3, 2), exact=True)
    # (0.7, 0.3) sits on the first (non-strict) boundary; float mode keeps it via the tolerance
    assert in_region_Sk(ExponentPair(0.7, 0.3), 1.5)


def test_region_rejects_nonpositive_k():
    with pytest.raises(ConfigError):
        in_region_Sk(ExponentPair(1, 0), 0)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.05, 5), st.floats(0, 5))
def test_region_monotone_in_k(a, b, k, dk):
    pair = ExponentPair(a, b)
    if in_region_Sk(pair, k):
        assert in_region_Sk(pair, k + dk)


@given(st.floats(1.0, 2.0), st.floats(0.05, 5))
def test_duality_closure(p, k):
    pair = ExponentPair(1 / p, 1 - 1 / p)
    if in_region_Sk(pair, k):
        assert p <= duality_line_pmax(k) + 1e-9


def test_duality_line_pmax():
    assert duality_line_pmax(1) == pytest.approx(4 / 3)
    assert duality_line_pmax(1.5) == pytest.approx(10 / 7)
    # k = (d - 3)/3 at d = 4 gives 3_* = 8/7
    assert duality_line_pmax(1 / 3) == pytest.approx(float(discrete_exponents(4)[0]))


def test_beta_and_exponents():
    assert beta_delta(2, 0.3) == 0
    assert beta_delta(1, 1) == 1
    assert discrete_exponents(4) == (Fraction(8, 7), 8)
    assert discrete_exponents(6) == (Fraction(4, 3), 4)
    with pytest.raises(ConfigError):
        discrete_exponents(3)
    with pytest.raises(ConfigError):
        beta_delta(2.5, 1)


def test_holder_spec():
    h = HolderSpec(k=1.5, delta=0.5)
    assert h.k_delta == 1.0
    assert h.beta(1) == 0.5
    with pytest.raises(ConfigError):
        HolderSpec(k=1, delta=0)


def test_curvature_window_readings():
    assert curvature_window(2, "intersection") == []
    assert curvature_window(3, "intersection") == []
    assert curvature_window(3) == [(0.0, 2.0), (10.0, 12.0)]
