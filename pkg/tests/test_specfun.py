import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logshot.errors import DomainError
from logshot.specfun import (PsiArgs, kummer_phi, ln_gamma, tricomi_psi,
                             tricomi_psi_derivative, tricomi_psi_series)
from oracles import psi_mp, psi_oracle


@pytest.mark.parametrize("x, expected", [(1.0, 0.0), (0.5, 0.5723649429247001), (4.0, math.log(6))])
def test_ln_gamma_values(x, expected):
    assert ln_gamma(x) == pytest.approx(expected, rel=1e-13, abs=1e-15)


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_ln_gamma_rejects_nonpositive(x):
    with pytest.raises(DomainError):
        ln_gamma(x)


def test_kummer_phi_trivial():
    assert kummer_phi(0.3, 1.7, 0.0) == 1.0
    assert kummer_phi(1, 1, 1) == pytest.approx(math.e, rel=1e-14)


def test_kummer_phi_against_mpmath():
    import mpmath
    ref = float(mpmath.hyp1f1(0.75, 1.5, 0.7))
    assert kummer_phi(0.75, 1.5, 0.7) == pytest.approx(ref, rel=1e-13)
    assert kummer_phi(-0.3, 2.2, -12.0) == pytest.approx(float(mpmath.hyp1f1(-0.3, 2.2, -12.0)), rel=1e-10)


def test_kummer_phi_rejects_nonpositive_integer_b():
    with pytest.raises(DomainError):
        kummer_phi(0.5, -2.0, 1.0)


def test_psi_at_zero_closed_form():
    expected = math.gamma(1.5) / math.gamma(1.25)
    assert tricomi_psi(-0.25, -0.5, 0.0) == pytest.approx(expected, rel=1e-15)
    assert expected == pytest.approx(0.977741, abs=1e-6)


def test_psi_integer_b_analytic():
    # a = 1, b = 3: int e^-s (1+s) ds = 2
    assert tricomi_psi(1, 3, 1) == pytest.approx(2.0, rel=1e-13)


def test_psi_against_dense_oracle():
    z = math.log(2)
    assert tricomi_psi(1.5, 2.5, z) == pytest.approx(psi_oracle(1.5, 2.5, z), rel=1e-12)


def test_psi_against_series_for_small_z():
    for a, b, z in [(-0.25, -0.5, 0.3), (0.7, 0.4, 1.0), (1.2, 1.6, 0.5)]:
        assert tricomi_psi(a, b, z) == pytest.approx(tricomi_psi_series(a, b, z), rel=1e-10)


def test_psi_domain_errors():
    with pytest.raises(DomainError):
        tricomi_psi(0.5, 0.5, -1.0)
    with pytest.raises(DomainError):
        tricomi_psi(0.5, 0.5, 0.0)
    with pytest.raises(DomainError):
        tricomi_psi_series(0.5, 2.0, 1.0)


def test_psi_vectorized_shape():
    z = np.linspace(0.1, 3, 12).reshape(3, 4)
    out = tricomi_psi(-0.2, -0.4, z)
    assert out.shape == (3, 4)
    assert out[1, 2] == tricomi_psi(-0.2, -0.4, float(z[1, 2]))


def test_psiargs_tuple():
    args = PsiArgs(1.0, 3.0, 1.0)
    assert tricomi_psi(*args) == pytest.approx(2.0, rel=1e-13)


def test_nondecreasing_for_negative_a():
    z = np.arange(0, 51) / 10
    for a, b in [(-0.1, -0.2), (-0.25, -0.5), (-0.45, -0.9), (-0.3, -1.6)]:
        vals = tricomi_psi(a, b, z)
        assert np.all(np.diff(vals) >= -1e-13 * vals[1:])


def test_derivative_sign_and_zero():
    d = tricomi_psi_derivative(-0.3, -0.6, 1.0)
    assert d == pytest.approx(0.3 * tricomi_psi(0.7, 0.4, 1.0), rel=1e-15)
    assert d > 0
    assert tricomi_psi_derivative(0.0, 0.5, 1.0) == 0.0


def test_derivative_central_difference():
    rng = np.random.default_rng(7)
    h = 1e-5
    for _ in range(20):
        a = rng.uniform(-0.45, -0.05)
        b = 2 * a
        z = rng.uniform(0.2, 4.0)
        fd = (tricomi_psi(a, b, z + h) - tricomi_psi(a, b, z - h)) / (2 * h)
        assert abs(tricomi_psi_derivative(a, b, z) - fd) <= 1e-5 * abs(tricomi_psi(a, b, z))


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.05, 3.0), b=st.floats(-1.5, 3.5), z=st.floats(1e-3, 20.0))
def test_psi_matches_mpmath(a, b, z):
    assert tricomi_psi(a, b, z) == pytest.approx(psi_mp(a, b, z), rel=1e-11)


@settings(max_examples=40, deadline=None)
@given(beta=st.floats(0.01, 0.49), z=st.floats(1e-4, 10.0))
def test_psi_negative_branch_matches_mpmath(beta, z):
    assert tricomi_psi(-beta, -2 * beta, z) == pytest.approx(psi_mp(-beta, -2 * beta, z), rel=1e-11)
    assert tricomi_psi(-beta, -2 * beta - 1, z) == pytest.approx(psi_mp(-beta, -2 * beta - 1, z), rel=1e-11)
