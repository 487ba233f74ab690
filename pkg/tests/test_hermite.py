import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from nahmzeta.classical import LEMNISCATE, NahmParams, period
from nahmzeta.hermite import (PUBLISHED_ANSATZ, AnsatzError, AnsatzSolution, GradedPoly,
                              bilinear_residual, compare_solutions, green_diagonal,
                              nahm_inputs, nahm_solution, perturb, quintic_roots,
                              solve_ansatz)
from nahmzeta.specfun import complete_K
from nahmzeta.spectral import green_spectral

K1 = complete_K(LEMNISCATE)
z_, b_, p_ = sp.symbols("z b p")


def _sym(poly: GradedPoly):
    return sum(sp.Rational(v.numerator, v.denominator) * z_ ** i * b_ ** (2 * j)
               for (i, j), v in poly.items())


def test_nahm_solution_exact_values():
    sol = nahm_solution()
    z = GradedPoly.z()
    assert sol.P1 == GradedPoly.constant(-3, 1) * (z - 1)
    assert sol.P2 == GradedPoly.constant(9, 2) * (z * z - 2 * z)
    assert sol.q_coefficient(4) == 0
    assert sol.q_coefficient(3) == GradedPoly.constant(-21, 2)
    assert sol.q_coefficient(2) == 0
    assert sol.q_coefficient(1) == GradedPoly.constant(108, 4)
    assert sol.q_coefficient(0) == 0
    assert sol.residual_identity() == {}


def test_identity_checked_by_independent_cas():
    """b^2(rho(2PP'' - P'^2) + rho' P P') - (p + u) P^2 + Q == 0 expanded by sympy."""
    sol = nahm_solution()
    u = _sym(sol.u)
    rho = _sym(sol.rho)
    P = p_ ** 2 + _sym(sol.P1) * p_ + _sym(sol.P2)
    Q = sum(_sym(c) * p_ ** (4 - t) for t, c in enumerate(sol.q)) + p_ ** 5
    Pz, Pzz = sp.diff(P, z_), sp.diff(P, z_, 2)
    expr = b_ ** 2 * (rho * (2 * P * Pzz - Pz ** 2) + sp.diff(rho, z_) * P * Pz) \
        - (p_ + u) * P ** 2 + Q
    assert sp.expand(expr) == 0


def test_published_values_fail_identity():
    """The printed P2 and q2 do not satisfy the identity (negative control)."""
    sol = AnsatzSolution(PUBLISHED_ANSATZ.P, PUBLISHED_ANSATZ.q, *nahm_inputs())
    assert sol.residual_identity() != {}
    names = {m["name"] for m in compare_solutions(nahm_solution())}
    assert names == {"P2", "q2"}


def test_free_case():
    sol = solve_ansatz(GradedPoly(), GradedPoly(), 0)
    # Q = p, P = 1
    assert sol.P == () and sol.q == (GradedPoly(),)
    for p in (0.5, 2.0, 7.0 + 1j):
        g = green_diagonal(p, 0.3, NahmParams(coupling=0.0))
        assert g == pytest.approx(1 / (2 * np.sqrt(p)), rel=1e-14)
        assert abs(bilinear_residual(p, 0.3, NahmParams(coupling=0.0))) < 1e-14


@given(st.fractions(min_value=-3, max_value=3, max_denominator=7))
def test_z_shift_covariance(delta):
    u, rho = nahm_inputs()
    shifted = solve_ansatz(u.shift(delta), rho.shift(delta), 2)
    base = nahm_solution()
    assert shifted.q == base.q
    assert [P.shift(0) for P in shifted.P] == [P.shift(delta) for P in base.P]


def test_weight_mismatch_rejected():
    z = GradedPoly.z()
    with pytest.raises(ValueError):
        solve_ansatz(GradedPoly.constant(-6, 2) * (1 - z), GradedPoly.z(), 2)


def test_inconsistent_ansatz_raises_with_residuals():
    # -4 is not of the finite-gap form n(n+1): no degree-2 solution exists
    z = GradedPoly.z()
    with pytest.raises(AnsatzError) as exc:
        solve_ansatz(GradedPoly.constant(-4, 1) * (1 - z), z * (1 - z) * (2 - z), 2)
    assert exc.value.residuals


def test_one_gap_potential_underdetermined_at_degree_two():
    # -2 = -n(n+1) with n = 1: the degree-1 solution times (p - c) leaves c free
    z = GradedPoly.z()
    with pytest.raises(AnsatzError, match="underdetermined"):
        solve_ansatz(GradedPoly.constant(-2, 1) * (1 - z), z * (1 - z) * (2 - z), 2)
    sol = solve_ansatz(GradedPoly.constant(-2, 1) * (1 - z), z * (1 - z) * (2 - z), 1)
    assert sol.residual_identity() == {}


def test_quintic_roots():
    roots = quintic_roots(nahm_solution())
    r3 = math.sqrt(3)
    assert roots.values(1.0) == pytest.approx([-2 * r3, -3, 0, 3, 2 * r3], abs=1e-15)
    assert roots.values(2.0) == pytest.approx(4 * roots.values(1.0), abs=1e-14)
    nonzero = [r for r in roots.roots if r.coef != 0]
    prod = Fraction(1)
    for r in nonzero:
        prod *= r.coef
    radicals = math.prod(r.radicand for r in nonzero)
    # Vieta on p^4 + q3 p^2 + q1: product of the four roots equals q1 (b = 1)
    assert prod * math.isqrt(radicals) == 108 and math.isqrt(radicals) ** 2 == radicals


def test_reflection_symmetry():
    sol = nahm_solution()
    assert all(sol.q_coefficient(j) == 0 for j in (0, 2, 4))
    assert PUBLISHED_ANSATZ.q_coefficient(2) != 0


def test_json_roundtrip():
    sol = nahm_solution()
    assert AnsatzSolution.from_json(sol.to_json()) == sol
    assert GradedPoly.from_json(sol.P2.to_json()) == sol.P2


polys = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)),
                        st.fractions(max_denominator=9), max_size=4).map(GradedPoly)


@given(polys, polys, polys)
def test_graded_ring_axioms(a, b, c):
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a - a == GradedPoly()
    assert (a * b).diff() == a.diff() * b + a * b.diff()


@given(polys, st.floats(-2, 2), st.floats(0.5, 2))
def test_graded_numeric_evaluation(a, z, b):
    val = sum(float(v) * z ** i * b ** (2 * j) for (i, j), v in a.items())
    assert a(z, b) == pytest.approx(val, rel=1e-12, abs=1e-12)


def test_bilinear_residual_random():
    rng = np.random.default_rng(3)
    P = NahmParams()
    L = period(P)
    worst = 0.0
    for _ in range(200):
        p = complex(rng.uniform(-6, 6), rng.uniform(0.05, 4))
        x = rng.uniform(0, L)
        worst = max(worst, abs(bilinear_residual(p, x, P)))
    assert worst < 1e-9


def test_perturbed_solution_negative_control():
    bad = perturb(nahm_solution(), "P1")
    assert bad.residual_identity() != {}
    assert abs(bilinear_residual(5.0 + 1j, 0.4, NahmParams(), bad)) > 1e-3


@given(st.floats(3.5, 50), st.floats(0, 3))
def test_green_real_positive_above_spectrum(p, x):
    g = green_diagonal(p, x, NahmParams())
    assert abs(g.imag) < 1e-14 * abs(g) and g.real > 0


def test_green_large_p_asymptotics():
    for p in (1e3, 1e4, 1e5):
        g = green_diagonal(p, 0.7, NahmParams())
        assert abs(g * 2 * math.sqrt(p) - 1) < 30 / p


@given(st.floats(0, 3), st.sampled_from([0.5, 1.0, 2.0]))
def test_green_periodic(x, b):
    P = NahmParams(b=b)
    p = 5.0 * b * b + 0.5j
    assert green_diagonal(p, x + period(P), P) == pytest.approx(green_diagonal(p, x, P),
                                                                  rel=1e-12)


def test_green_matches_ode_oracle_quarter_period():
    P = NahmParams()
    g = green_diagonal(4.0, K1, P)
    ref = green_spectral(-4.0, K1, K1, P)
    assert abs(g - ref) / abs(ref) < 1e-6
