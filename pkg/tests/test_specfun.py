import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from nahmzeta.specfun import (agm, complete_E, complete_K, jacobi, modulus_to_parameter,
                              parameter_to_modulus, theta_g1)

M_GRID = [-1.0, -0.7, -0.3, 0.0, 0.25, 0.5, 0.9, 0.99]


def _quad(m, power):
    with mpmath.workdps(30):
        f = lambda t: (1 - m * mpmath.sin(t) ** 2) ** power
        return float(mpmath.quad(f, [0, mpmath.pi / 2]))


def _quad_K(m):
    return _quad(m, -0.5)


def _quad_E(m):
    return _quad(m, 0.5)


@pytest.mark.parametrize("m, expected", [(0.0, math.pi / 2), (-1.0, 1.3110287771461),
                                         (0.5, 1.8540746773014)])
def test_complete_K_examples(m, expected):
    assert complete_K(m) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("m, expected", [(0.0, math.pi / 2), (-1.0, 1.9100988945139),
                                         (0.5, 1.3506438810476)])
def test_complete_E_examples(m, expected):
    assert complete_E(m) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("m", M_GRID)
def test_complete_integrals_match_quadrature_oracle(m):
    assert complete_K(m) == pytest.approx(_quad_K(m), rel=1e-13)
    assert complete_E(m) == pytest.approx(_quad_E(m), rel=1e-13)


@pytest.mark.parametrize("m", M_GRID)
def test_complete_integrals_match_scipy(m):
    assert complete_K(m) == pytest.approx(special.ellipk(m), rel=1e-13)
    assert complete_E(m) == pytest.approx(special.ellipe(m), rel=1e-13)


def test_lemniscate_ordering():
    assert complete_E(-1.0) > complete_K(-1.0) > 1.0


def test_agm_iteration_count():
    for m in np.linspace(-1.0, 0.99, 50):
        _, n = agm(1.0, math.sqrt(1.0 - m))
        assert n <= 12


def test_domain_errors():
    with pytest.raises(ValueError):
        complete_K(1.0)
    with pytest.raises(ValueError):
        jacobi(0.3, 1.5)
    with pytest.raises(ValueError):
        theta_g1(0.0, 1.0, 3)
    with pytest.raises(ValueError):
        theta_g1(0.0, 0.5, 5)


@given(st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)
       .filter(lambda k: abs(k.real) < 1e-300 or abs(k.imag) < 1e-300))
def test_modulus_parameter_roundtrip(k):
    m = modulus_to_parameter(k)
    if m < 1:
        k2 = parameter_to_modulus(m)
        assert modulus_to_parameter(k2) == pytest.approx(m, abs=1e-12)


def test_modulus_i_is_lemniscate():
    assert modulus_to_parameter(1j) == -1.0
    assert parameter_to_modulus(-1.0) == pytest.approx(1j)


def test_jacobi_examples():
    for m in M_GRID:
        t = jacobi(0.0, m)
        assert (t.sn, t.cn, t.dn) == (0.0, 1.0, 1.0)
    assert jacobi(complete_K(-1.0), -1.0).sn == pytest.approx(1.0, abs=1e-14)


@given(st.floats(-20, 20), st.sampled_from(M_GRID))
def test_jacobi_identities(u, m):
    t = jacobi(u, m)
    assert abs(t.sn ** 2 + t.cn ** 2 - 1) < 1e-12
    assert abs(t.dn ** 2 + m * t.sn ** 2 - 1) < 1e-12


@given(st.floats(-10, 10), st.sampled_from([-1.0, -0.4, 0.3, 0.8]))
def test_jacobi_matches_mpmath(u, m):
    t = jacobi(u, m)
    for name in ("sn", "cn", "dn"):
        ref = complex(mpmath.ellipfun(name, u, m=m)).real
        assert getattr(t, name) == pytest.approx(ref, abs=1e-12)


def test_mean_sn_squared_lemniscate():
    K, E = complete_K(-1.0), complete_E(-1.0)
    x = np.linspace(0, 2 * K, 4097)
    sn = jacobi(x, -1.0).sn
    mean = integrate.simpson(sn * sn, x=x) / (2 * K)
    assert mean == pytest.approx((E - K) / K, abs=1e-12)
    # the rounded value quoted for this mean
    assert mean == pytest.approx(0.456944, abs=5e-6)


def test_theta_examples():
    assert theta_g1(0.0, 0.3, 1)[0] == 0.0
    assert theta_g1(0.0, 1e-12, 3)[0] == pytest.approx(1.0, abs=1e-11)
    # direct summation 1 + 2(0.1 + 0.1^4 + 0.1^9 + ...) = 1.200200002...
    assert theta_g1(0.0, 0.1, 3)[0] == pytest.approx(1.2002000020000002, abs=1e-15)


@given(st.floats(-3, 3), st.floats(0.01, 0.9), st.integers(1, 4))
def test_theta_matches_mpmath_with_tail_bound(v, q, kind):
    val, tail = theta_g1(v, q, kind)
    assert tail < 1e-14
    assert val == pytest.approx(float(mpmath.jtheta(kind, v, q)), abs=1e-13)
