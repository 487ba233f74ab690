import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nahmzeta.quadrature import QuadratureSpec
from nahmzeta.riemann import (BETA, CurvePoint, HyperellipticCurve, ThetaArgs, abel_map,
                              automorphism_T, curve_radicand_factorization, im_potential, im_psi,
                              im_psi_residual, lame_curve, period_matrix, recover_U_D,
                              second_kind, theta_g2)
from nahmzeta.specfun import complete_K
from nahmzeta.spectral import hill_band_edges
from nahmzeta.classical import LEMNISCATE, NahmParams

R3 = 2 * math.sqrt(3)
EDGES = (-R3, -3.0, 0.0, 3.0, R3)


@pytest.fixture(scope="module")
def pm():
    return period_matrix()


@pytest.fixture(scope="module")
def rec():
    return recover_U_D()


def test_beta_and_factorization():
    assert BETA == pytest.approx(2 / math.sqrt(3), rel=1e-15)
    lhs, rhs = curve_radicand_factorization()
    assert lhs == rhs and all(isinstance(c, Fraction) for c in lhs)


def test_scaled_curve_reproduces_band_edges():
    c = lame_curve()
    assert np.allclose(c.lam_points, EDGES, atol=1e-14)


def test_curve_validation():
    with pytest.raises(ValueError):
        HyperellipticCurve((0.0, 1.0, 1.0, 2.0, 3.0))
    with pytest.raises(ValueError):
        HyperellipticCurve((0.0, 1.0, 2.0))


def _curve_point(p):
    return complex(lame_curve().mu(p)), complex(p)


@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=5.0, allow_nan=False, allow_infinity=False))
def test_automorphism_preserves_curve(p):
    c = lame_curve()
    mu1, p1 = automorphism_T(_curve_point(p))
    scale = max(1.0, abs(mu1) ** 2)
    assert c.residual(mu1, p1) < 1e-10 * scale


@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=5.0, allow_nan=False, allow_infinity=False))
def test_automorphism_is_involutive(p):
    pt = _curve_point(p)
    twice = automorphism_T(automorphism_T(pt))
    assert abs(twice[0] - pt[0]) < 1e-10 * max(1.0, abs(pt[0]))
    assert abs(twice[1] - pt[1]) < 1e-12 * abs(pt[1])
    four = automorphism_T(automorphism_T(twice))
    assert abs(four[1] - pt[1]) < 1e-12 * abs(pt[1])


def test_automorphism_examples():
    mu, p = automorphism_T(_curve_point(1.0))
    assert p == pytest.approx(-BETA) and abs(mu) < 1e-12
    _, p = automorphism_T(_curve_point(BETA))
    assert p == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        automorphism_T((0.0, 0.0))
    with pytest.raises(ValueError):
        automorphism_T(_curve_point(1.0), branch="other")


def test_negated_branch_leaves_curve():
    c = lame_curve()
    pt = _curve_point(0.5 + 0.3j)
    mu1, p1 = automorphism_T(pt, branch="negated")
    assert c.residual(mu1, p1) > 1e-3


def test_tau_properties(pm):
    assert pm.symmetry_error() < 1e-10
    assert pm.min_imag_eig() > 0
    assert np.max(np.abs(pm.tau.real)) < 1e-10
    assert np.allclose(pm.tau, 1j * np.array([[5, 1], [1, 2]]) / 3, atol=1e-10)
    d = json.loads(json.dumps(pm.to_json()))
    assert d["symmetry_error"] < 1e-10


def test_tau_panel_doubling(pm):
    fine = period_matrix(quad=QuadratureSpec(panels=8))
    assert np.max(np.abs(fine.tau - pm.tau)) < 1e-9


def test_second_kind_vector(pm):
    U = second_kind(pm)
    L = 2 * complete_K(LEMNISCATE)
    assert np.allclose(U * L, pm.tau @ np.array([-1, -1]), atol=1e-9)


def test_theta_even_and_periodic(pm):
    rng = np.random.default_rng(3)
    for _ in range(20):
        z = rng.normal(size=2) + 0.3j * rng.normal(size=2)
        m = rng.integers(-3, 4, size=2)
        t = theta_g2(ThetaArgs(z, pm))
        assert abs(theta_g2(ThetaArgs(-z, pm)) - t) < 1e-12 * max(1, abs(t))
        assert abs(theta_g2(ThetaArgs(z + m, pm)) - t) < 1e-11 * max(1, abs(t))


def test_theta_quasi_periodicity(pm):
    rng = np.random.default_rng(5)
    tau = pm.tau
    for _ in range(20):
        z = rng.normal(size=2) * 0.5 + 0.2j * rng.normal(size=2)
        m = rng.integers(-1, 2, size=2)
        lhs = theta_g2(ThetaArgs(z + tau @ m, pm))
        rhs = np.exp(-1j * math.pi * m @ tau @ m - 2j * math.pi * m @ z) * theta_g2(ThetaArgs(z, pm))
        assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(rhs))


def test_theta_tail_bound_and_errors(pm):
    r = theta_g2(ThetaArgs(np.array([0.1, 0.2]), pm), full=True)
    ref = theta_g2(ThetaArgs(np.array([0.1, 0.2]), pm, N=40))
    assert r.tail < 1e-13 and abs(r.value - ref) <= max(r.tail, 1e-15)
    with pytest.raises(ArithmeticError):
        theta_g2(ThetaArgs(np.array([0.0, 50j]), pm, N=2))
    with pytest.raises(ValueError):
        ThetaArgs(np.zeros(2), np.eye(3))
    with pytest.raises(ValueError):
        ThetaArgs(np.zeros(3), pm)


def test_im_potential_trivial_and_integer_shift(pm, rec):
    y = np.linspace(0, 2, 7)
    assert np.allclose(im_potential(np.zeros(2), np.zeros(2), y, pm), 0.0, atol=1e-14)
    a = im_potential(rec.U, rec.D, y, pm)
    b = im_potential(rec.U, rec.D + np.array([1, -2]), y, pm)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_recovery(rec):
    L = 2 * complete_K(LEMNISCATE)
    assert rec.converged and rec.mismatch < 1e-5
    assert rec.period == pytest.approx(L, rel=1e-6)
    d = json.loads(json.dumps(rec.to_json()))
    assert d["mismatch"] == rec.mismatch


def test_recovery_scales_with_b(rec):
    big = recover_U_D(HyperellipticCurve((-BETA, -1.0, 0.0, 1.0, BETA), 12.0))
    assert np.allclose(big.U, 2 * rec.U, rtol=1e-9)
    assert big.period == pytest.approx(rec.period / 2, rel=1e-9)
    assert big.mismatch < 1e-5 * 4


def test_im_psi_normalization():
    assert im_psi(0.0, CurvePoint(-5.0)) == 1.0
    assert im_psi(0.0, CurvePoint(1.5, -1)) == 1.0


@pytest.mark.parametrize("h", EDGES)
@pytest.mark.parametrize("sheet", [1, -1])
def test_im_psi_residual_at_edges(h, sheet):
    assert im_psi_residual(CurvePoint(h, sheet)) < 1e-4


@pytest.mark.parametrize("h", [-5.0, -1.5, 1.0, 3.3, 8.0])
def test_im_psi_residual_generic(h):
    assert im_psi_residual(CurvePoint(h)) < 1e-6


def test_edge_multipliers_match_hill():
    L = 2 * complete_K(LEMNISCATE)
    bs = hill_band_edges(NahmParams())
    per = np.array(bs.periodic)
    anti = np.array(bs.antiperiodic)
    for h in EDGES:
        psi, dpsi, _ = im_psi(np.array([0.0, L]), CurvePoint(h), derivatives=True)
        i = 0 if abs(psi[0]) > 1e-8 else 1
        vals = psi if i == 0 else dpsi
        mult = (vals[1] / vals[0]).real
        target = per if mult > 0 else anti
        assert abs(abs(mult) - 1) < 1e-6
        assert np.min(np.abs(target - h)) < 1e-8


def test_gap_wronskian_nonzero():
    y = np.linspace(0.0, 1.0, 5)
    for h in (-5.0, -1.5, 3.3):
        p, dp, _ = im_psi(y, CurvePoint(h, 1), derivatives=True)
        m, dm, _ = im_psi(y, CurvePoint(h, -1), derivatives=True)
        W = p * dm - dp * m
        assert abs(W[0]) > 1e-3
        assert np.allclose(W, W[0], rtol=1e-8)


def test_curve_point_validation():
    with pytest.raises(ValueError):
        CurvePoint(0.0, 2)
    assert CurvePoint(1.0).involution() == CurvePoint(1.0, -1)


def test_abel_map_involution(pm):
    a = abel_map(CurvePoint(-5.0), pm)
    assert np.allclose(abel_map(CurvePoint(-5.0, -1), pm), -a)
