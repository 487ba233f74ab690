"""Exact polynomial solution of the bilinear equation for the resolvent diagonal.

Let ``D = -d^2/dx^2 + u`` and ``G(p, x)`` the diagonal of ``(D + p)^{-1}``.
Then

    2 G G'' - G'^2 - 4 (u + p) G^2 + 1 = 0,

which the free diagonal ``1/(2 sqrt(p))`` satisfies.  With
``z = cn^2(bx | -1)`` the background is ``u = -6 b^2 (1 - z)`` and
``(dz/dx)^2 = 4 b^2 rho(z)``, ``rho = z (1 - z)(2 - z)``.  The ansatz
``G = P(p, z) / (2 sqrt(Q(p)))`` turns the equation into the polynomial
identity

    b^2 (rho (2 P P'' - P'^2) + rho' P P') - (p + u) P^2 + Q = 0

(primes in ``z``), which is solved here by exact coefficient matching.

Unknown coefficients carry fixed weights in ``b^2`` (``p`` has weight 1,
``z`` weight 0), so the system is solved at ``b = 1`` and the powers of
``b^2`` are restored afterwards.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .classical import LEMNISCATE, NahmParams
from .specfun import jacobi

__all__ = [
    "GradedPoly",
    "AnsatzSolution",
    "AnsatzError",
    "ExactRoot",
    "SpectralCurveRoots",
    "nahm_inputs",
    "solve_ansatz",
    "quintic_roots",
    "nahm_solution",
    "sqrt_Q",
    "green_diagonal",
    "green_diagonal_derivatives",
    "bilinear_residual",
    "PUBLISHED_ANSATZ",
    "compare_solutions",
    "perturb",
]


def _frac(value) -> Fraction:
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def _fmt(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


class GradedPoly:
    """Polynomial in ``z`` with coefficients ``rational * (b^2)^k``.

    Stored as a mapping ``(z_power, b2_power) -> Fraction`` with zero
    entries removed, so equality is coefficient-wise.
    """

    __slots__ = ("_c",)

    def __init__(self, coefficients=None):
        c = {}
        for (i, j), v in dict(coefficients or {}).items():
            v = _frac(v)
            if int(i) != i or i < 0:
                raise ValueError("z powers must be non-negative integers")
            if v:
                c[(int(i), int(j))] = c.get((int(i), int(j)), Fraction(0)) + v
        self._c = {k: v for k, v in c.items() if v}

    # construction helpers
    @classmethod
    def constant(cls, value, b2_power: int = 0):
        return cls({(0, b2_power): value})

    @classmethod
    def z(cls):
        return cls({(1, 0): 1})

    @classmethod
    def from_coeffs(cls, coeffs, b2_power: int = 0):
        """``sum coeffs[i] z^i`` times ``(b^2)^b2_power``."""
        return cls({(i, b2_power): c for i, c in enumerate(coeffs)})

    @property
    def coefficients(self) -> dict:
        return dict(self._c)

    def items(self):
        return sorted(self._c.items())

    def is_zero(self) -> bool:
        return not self._c

    @property
    def degree(self) -> int:
        return max((i for i, _ in self._c), default=-1)

    def b2_powers(self) -> set:
        return {j for _, j in self._c}

    # arithmetic
    def __add__(self, other):
        other = _as_graded(other)
        out = dict(self._c)
        for k, v in other._c.items():
            out[k] = out.get(k, Fraction(0)) + v
        return GradedPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return GradedPoly({k: -v for k, v in self._c.items()})

    def __sub__(self, other):
        return self + (-_as_graded(other))

    def __rsub__(self, other):
        return _as_graded(other) - self

    def __mul__(self, other):
        other = _as_graded(other)
        out = {}
        for (i1, j1), v1 in self._c.items():
            for (i2, j2), v2 in other._c.items():
                k = (i1 + i2, j1 + j2)
                out[k] = out.get(k, Fraction(0)) + v1 * v2
        return GradedPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = GradedPoly.constant(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        try:
            other = _as_graded(other)
        except TypeError:
            return NotImplemented
        return self._c == other._c

    def __hash__(self):
        return hash(frozenset(self._c.items()))

    def diff(self):
        """Derivative in ``z``."""
        return GradedPoly({(i - 1, j): i * v for (i, j), v in self._c.items() if i > 0})

    def shift(self, delta):
        """Compose with ``z -> z + delta`` for rational ``delta``."""
        delta = _frac(delta)
        out = {}
        for (i, j), v in self._c.items():
            for k in range(i + 1):
                c = v * math.comb(i, k) * delta ** (i - k)
                out[(k, j)] = out.get((k, j), Fraction(0)) + c
        return GradedPoly(out)

    def scale_b(self, factor: int = 1):
        """Multiply every term by ``(b^2)^factor``."""
        return GradedPoly({(i, j + factor): v for (i, j), v in self._c.items()})

    def at_b(self, b: float) -> np.ndarray:
        """Float coefficient array in ascending powers of ``z`` for a given ``b``."""
        out = np.zeros(max(self.degree + 1, 1))
        b2 = b * b
        for (i, j), v in self._c.items():
            out[i] += float(v) * b2 ** j
        return out

    def __call__(self, z, b: float = 1.0):
        return np.polynomial.polynomial.polyval(z, self.at_b(b))

    def to_json(self):
        return [[i, j, _fmt(v)] for (i, j), v in self.items()]

    @classmethod
    def from_json(cls, data):
        return cls({(int(i), int(j)): _frac(v) for i, j, v in data})

    def __repr__(self):
        if not self._c:
            return "0"
        parts = []
        for (i, j), v in sorted(self._c.items(), reverse=True):
            s = str(v)
            if j:
                s += f"*b^{2 * j}"
            if i:
                s += "*z" + (f"^{i}" if i > 1 else "")
            parts.append(s)
        return " + ".join(parts).replace("+ -", "- ")


def _as_graded(x) -> GradedPoly:
    if isinstance(x, GradedPoly):
        return x
    if isinstance(x, (int, Fraction)):
        return GradedPoly.constant(x)
    raise TypeError(f"cannot combine GradedPoly with {type(x).__name__}")


def nahm_inputs():
    """``u = -6 b^2 (1 - z)`` and ``rho = z (1 - z)(2 - z)`` as GradedPolys."""
    z = GradedPoly.z()
    u = GradedPoly.constant(-6, 1) * (1 - z)
    rho = z * (1 - z) * (2 - z)
    return u, rho


# -- sparse multivariate polynomials for the solver ---------------------------

class _MPoly:
    """Sparse polynomial over Q; keys are exponent tuples of fixed length."""

    __slots__ = ("t", "n")

    def __init__(self, terms, n):
        self.n = n
        self.t = {k: v for k, v in terms.items() if v}

    @classmethod
    def const(cls, c, n):
        return cls({(0,) * n: Fraction(c)}, n)

    @classmethod
    def var(cls, i, n):
        e = [0] * n
        e[i] = 1
        return cls({tuple(e): Fraction(1)}, n)

    def __add__(self, o):
        out = dict(self.t)
        for k, v in o.t.items():
            out[k] = out.get(k, Fraction(0)) + v
        return _MPoly(out, self.n)

    def __neg__(self):
        return _MPoly({k: -v for k, v in self.t.items()}, self.n)

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if not isinstance(o, _MPoly):
            o = Fraction(o)
            return _MPoly({k: v * o for k, v in self.t.items()}, self.n)
        out = {}
        for k1, v1 in self.t.items():
            for k2, v2 in o.t.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, Fraction(0)) + v1 * v2
        return _MPoly(out, self.n)

    def diff(self, i):
        out = {}
        for k, v in self.t.items():
            if k[i]:
                e = list(k)
                e[i] -= 1
                out[tuple(e)] = out.get(tuple(e), Fraction(0)) + v * k[i]
        return _MPoly(out, self.n)

    def degree_in(self, i):
        return max((k[i] for k in self.t), default=0)

    def split_linear(self, i):
        """Return ``(c, rest)`` with ``self = c * x_i + rest`` if degree is 1."""
        c, rest = {}, {}
        for k, v in self.t.items():
            if k[i] == 1:
                e = list(k)
                e[i] = 0
                c[tuple(e)] = v
            else:
                rest[k] = v
        return _MPoly(c, self.n), _MPoly(rest, self.n)

    def is_const(self):
        return all(not any(k) for k in self.t)

    def const_value(self):
        return self.t.get((0,) * self.n, Fraction(0))

    def subs(self, i, value: "_MPoly"):
        powers = [_MPoly.const(1, self.n)]
        out = _MPoly({}, self.n)
        for k, v in self.t.items():
            e = list(k)
            d = e[i]
            e[i] = 0
            while len(powers) <= d:
                powers.append(powers[-1] * value)
            out = out + _MPoly({tuple(e): v}, self.n) * powers[d]
        return out

    def variables(self):
        return sorted({i for k in self.t for i, e in enumerate(k) if e})


class AnsatzError(ValueError):
    """The coefficient-matching system has no (unique) exact solution.

    ``residuals`` lists ``(p_power, z_power, value)`` triples of equations
    left unsatisfied; ``value`` is an exact rational at ``b = 1``, or a
    string for equations still containing unknowns.
    """

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


@dataclass(frozen=True)
class AnsatzSolution:
    """Exact ``P = sum_k P_k(z) p^(n-k)`` (``P_0 = 1``) and odd-degree ``Q``.

    ``P`` holds ``P_1 .. P_n``; ``q`` holds ``q_{2n} .. q_0`` of
    ``Q = p^(2n+1) + sum_j q_j p^j``, each a z-independent GradedPoly.
    """

    P: tuple
    q: tuple
    u: GradedPoly = dc_field(default=None, compare=False)
    rho: GradedPoly = dc_field(default=None, compare=False)

    @property
    def degree(self) -> int:
        return len(self.P)

    @property
    def P1(self) -> GradedPoly:
        return self.P[0]

    @property
    def P2(self) -> GradedPoly:
        return self.P[1]

    def q_coefficient(self, j: int) -> GradedPoly:
        """Coefficient of ``p^j`` in ``Q`` (``j = 2n + 1`` gives 1)."""
        n2 = 2 * self.degree
        if j == n2 + 1:
            return GradedPoly.constant(1)
        return self.q[n2 - j]

    def residual_identity(self):
        """Expand the polynomial identity exactly; returns the nonzero terms.

        Keys are ``(p_power, z_power, b2_power)``.  An exact solution gives
        an empty dict.
        """
        if self.u is None or self.rho is None:
            raise ValueError("solution does not carry its inputs")
        n = self.degree
        # polynomials in p with GradedPoly coefficients, as dict power -> GradedPoly
        P = {n: GradedPoly.constant(1)}
        for k, Pk in enumerate(self.P, start=1):
            P[n - k] = Pk
        Pz = {k: v.diff() for k, v in P.items()}
        Pzz = {k: v.diff() for k, v in Pz.items()}
        out = {}

        def acc(power, poly):
            out[power] = out.get(power, GradedPoly()) + poly

        rho, drho = self.rho, self.rho.diff()
        for i, a in P.items():
            for j, c in P.items():
                acc(i + j, (rho * (2 * a * Pzz[j] - Pz[i] * Pz[j]) + drho * a * Pz[j]).scale_b(1))
                acc(i + j, -self.u * a * c)
                acc(i + j + 1, -(a * c))
        for j in range(2 * n + 2):
            acc(j, self.q_coefficient(j))
        terms = {}
        for power, poly in out.items():
            for (zi, bj), v in poly.items():
                terms[(power, zi, bj)] = v
        return terms

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "P": [Pk.to_json() for Pk in self.P],
            "q": [qk.to_json() for qk in self.q],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data) -> "AnsatzSolution":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(tuple(GradedPoly.from_json(x) for x in data["P"]),
                   tuple(GradedPoly.from_json(x) for x in data["q"]))


def _check_weight(poly: GradedPoly, weight: int, name: str):
    bad = poly.b2_powers() - {weight}
    if bad:
        raise ValueError(
            f"{name} must be homogeneous of weight {weight} in b^2 (p has weight 1, "
            f"z weight 0); found powers {sorted(bad)}")


def _to_mpoly_z(poly: GradedPoly, n):
    return _MPoly({(0, i) + (0,) * (n - 2): v for (i, _), v in poly.items()}, n)


def solve_ansatz(u: GradedPoly, rho: GradedPoly, degree: int = 2) -> AnsatzSolution:
    """Solve the bilinear identity for ``P`` of degree ``degree`` in ``p``.

    Parameters
    ----------
    u : GradedPoly
        Potential as a polynomial in ``z``; every term must carry ``b^2``.
    rho : GradedPoly
        ``(dz/dx)^2 / (4 b^2)``; must be free of ``b``.
    degree : int
        ``n`` in ``P = p^n + P_1 p^(n-1) + ... + P_n`` with ``deg_z P_k = k``.

    Raises
    ------
    AnsatzError
        If the over-determined system is inconsistent, with the offending
        ``(p_power, z_power)`` equations attached.
    """
    _check_weight(u, 1, "u")
    _check_weight(rho, 0, "rho")
    n = int(degree)
    if n < 0:
        raise ValueError("degree must be >= 0")

    # variable layout: p, z, then P-coefficients c[k][i], then q_j
    names = []
    for k in range(1, n + 1):
        for i in range(k + 1):
            names.append(("P", k, i))
    for j in range(2 * n, -1, -1):
        names.append(("q", j))
    nv = 2 + len(names)
    index = {nm: 2 + t for t, nm in enumerate(names)}
    p = _MPoly.var(0, nv)
    z = _MPoly.var(1, nv)

    P = _MPoly({(0, 0) + (0,) * (nv - 2): Fraction(1)}, nv)
    for _ in range(n):
        P = P * p
    for k in range(1, n + 1):
        Pk = _MPoly({}, nv)
        zp = _MPoly.const(1, nv)
        for i in range(k + 1):
            Pk = Pk + zp * _MPoly.var(index[("P", k, i)], nv)
            zp = zp * z
        for _ in range(n - k):
            Pk = Pk * p
        P = P + Pk
    Q = _MPoly.const(1, nv)
    for _ in range(2 * n + 1):
        Q = Q * p
    pp = _MPoly.const(1, nv)
    for j in range(2 * n + 1):
        Q = Q + pp * _MPoly.var(index[("q", j)], nv)
        pp = pp * p

    U = _to_mpoly_z(u, nv)
    R = _to_mpoly_z(rho, nv)
    Pz = P.diff(1)
    Pzz = Pz.diff(1)
    lhs = R * (P * Pzz * 2 - Pz * Pz) + R.diff(1) * P * Pz - (p + U) * P * P + Q

    eqs = {}
    for k, v in lhs.t.items():
        key = (k[0], k[1])
        eqs[key] = eqs.get(key, _MPoly({}, nv)) + _MPoly({(0, 0) + k[2:]: v}, nv)

    solved = {}
    while True:
        eqs = {k: e for k, e in eqs.items() if e.t}
        pick = None
        for key in sorted(eqs, reverse=True):
            e = eqs[key]
            for var in e.variables():
                if var in solved or e.degree_in(var) != 1:
                    continue
                c, rest = e.split_linear(var)
                if c.is_const() and c.const_value() != 0:
                    pick = (var, rest * (-1 / c.const_value()))
                    break
            if pick:
                break
        if pick is None:
            break
        var, value = pick
        solved = {k: s.subs(var, value) for k, s in solved.items()}
        solved[var] = value
        eqs = {k: e.subs(var, value) for k, e in eqs.items()}

    leftover = [(kp, kz, e) for (kp, kz), e in sorted(eqs.items(), reverse=True) if e.t]
    if leftover:
        if all(e.is_const() for _, _, e in leftover):
            raise AnsatzError(
                "ansatz is inconsistent: nonzero residual equations remain",
                [(kp, kz, e.const_value()) for kp, kz, e in leftover])
        raise AnsatzError("ansatz could not be reduced to a unique solution",
                          [(kp, kz, repr(e.t)) for kp, kz, e in leftover])
    missing = [names[v - 2] for v in range(2, nv) if v not in solved]
    if missing:
        raise AnsatzError(f"ansatz is underdetermined in {missing}")

    def value_of(nm):
        s = solved[index[nm]]
        if not s.is_const():
            raise AnsatzError(f"coefficient {nm} is not determined uniquely")
        return s.const_value()

    Ps = tuple(GradedPoly({(i, k): value_of(("P", k, i)) for i in range(k + 1)})
               for k in range(1, n + 1))
    qs = tuple(GradedPoly.constant(value_of(("q", j)), 2 * n + 1 - j)
               for j in range(2 * n, -1, -1))
    return AnsatzSolution(Ps, qs, u, rho)


@lru_cache(maxsize=4)
def nahm_solution(coupling: float = 1.0) -> AnsatzSolution:
    """Cached exact solution for the Nahm background (or the free operator)."""
    if coupling == 1:
        u, rho = nahm_inputs()
        return solve_ansatz(u, rho, 2)
    if coupling == 0:
        return solve_ansatz(GradedPoly(), GradedPoly(), 0)
    raise ValueError("the exact ansatz is available for coupling 0 or 1 only")


# -- literature values and comparison ------------------------------------------

def _published():
    z = GradedPoly.z()
    P1 = GradedPoly.constant(-3, 1) * (z - 1)
    P2 = GradedPoly.constant(18, 2) * (z * z - 2 * z)
    # q2 is kept exactly as printed (b^8), although weight counting gives b^6
    q = (GradedPoly(), GradedPoly.constant(-21, 2), GradedPoly.constant(108, 4),
         GradedPoly.constant(108, 4), GradedPoly())
    return AnsatzSolution((P1, P2), q)


PUBLISHED_ANSATZ = _published()
"""Coefficients as printed in the source literature, kept for comparison."""


def compare_solutions(computed: AnsatzSolution, reference: AnsatzSolution = PUBLISHED_ANSATZ):
    """List coefficient-wise mismatches between two solutions.

    Returns
    -------
    list of dict
        ``{"name", "computed", "reference"}`` for each differing entry;
        empty when the solutions agree exactly.
    """
    out = []
    names = [f"P{k}" for k in range(1, computed.degree + 1)]
    n2 = 2 * computed.degree
    for k, nm in enumerate(names):
        ref = reference.P[k] if k < reference.degree else GradedPoly()
        if computed.P[k] != ref:
            out.append({"name": nm, "computed": repr(computed.P[k]), "reference": repr(ref)})
    for t, qk in enumerate(computed.q):
        j = n2 - t
        try:
            ref = reference.q_coefficient(j)
        except IndexError:
            ref = GradedPoly()
        if qk != ref:
            out.append({"name": f"q{j}", "computed": repr(qk), "reference": repr(ref)})
    return out


def perturb(solution: AnsatzSolution, name: str = "P1", delta=Fraction(1, 10)) -> AnsatzSolution:
    """Return a copy with ``delta * b^(2k)`` added to the constant term of ``P_k``.

    Negative-control helper: the perturbed solution no longer satisfies
    the bilinear equation.
    """
    if not name.startswith("P"):
        raise ValueError("only P_k can be perturbed")
    k = int(name[1:])
    Ps = list(solution.P)
    Ps[k - 1] = Ps[k - 1] + GradedPoly.constant(_frac(delta), k)
    return AnsatzSolution(tuple(Ps), solution.q, solution.u, solution.rho)


# -- exact roots of Q ------------------------------------------------------------

def _squarefree_split(n: int):
    """``n = s^2 f`` with ``f`` squarefree; returns ``(s, f)``."""
    s, f, d = 1, 1, 2
    while d * d <= n:
        while n % (d * d) == 0:
            n //= d * d
            s *= d
        if n % d == 0:
            n //= d
            f *= d
        d += 1
    return s, f * n


@dataclass(frozen=True, order=True)
class ExactRoot:
    """The number ``coef * sqrt(radicand) * b^2`` (``radicand`` squarefree)."""

    coef: Fraction
    radicand: int = 1

    @property
    def unit_value(self) -> float:
        return float(self.coef) * math.sqrt(self.radicand)

    def value(self, b: float = 1.0) -> float:
        return self.unit_value * b * b

    def __repr__(self):
        if self.coef == 0:
            return "0"
        r = "" if self.radicand == 1 else f"*sqrt({self.radicand})"
        return f"{self.coef}{r}*b^2"


def _sqrt_rational(r: Fraction):
    """``sqrt(r)`` as ``(coef, radicand)`` for rational ``r >= 0``."""
    if r < 0:
        raise ValueError("negative radicand")
    s, f = _squarefree_split(r.numerator * r.denominator)
    return Fraction(s, r.denominator), f


class SpectralCurveRoots(NamedTuple):
    roots: tuple

    def values(self, b: float = 1.0) -> np.ndarray:
        return np.array([r.value(b) for r in self.roots])


def quintic_roots(sol: AnsatzSolution) -> SpectralCurveRoots:
    """Exact roots of ``Q`` using its oddness in ``p``.

    ``Q = p R(p^2)`` with ``deg R <= 2`` is solved by the quadratic formula
    in ``p^2``; roots are returned in ascending order.

    Raises
    ------
    ValueError
        If ``Q`` is not odd in ``p`` or the roots are not of the form
        ``rational * sqrt(integer) * b^2``.
    """
    n = sol.degree
    if n > 2:
        raise ValueError("only Q of degree <= 5 is supported")
    # coefficients at b = 1; homogeneity restores b^2 scaling of the roots
    coeff = {}
    for j in range(2 * n + 2):
        c = sol.q_coefficient(j)
        coeff[j] = sum(c.coefficients.values(), Fraction(0))
    even = [j for j in coeff if j % 2 == 0 and coeff[j] != 0]
    if even:
        raise ValueError(f"Q is not odd in p: nonzero coefficients of p^{even}")
    # R(w) = w^n + c_{2n-1} w^{n-1} + ... with w = p^2
    R = [coeff[2 * i + 1] for i in range(n + 1)]  # ascending in w
    if n == 0:
        ws = []
    elif n == 1:
        ws = [-R[0]]
    else:
        disc = R[1] ** 2 - 4 * R[0]
        if disc < 0:
            raise ValueError("complex roots of Q are not supported")
        dc, dr = _sqrt_rational(disc)
        if dr != 1:
            raise ValueError("roots of Q would need nested radicals")
        ws = [(-R[1] - dc) / 2, (-R[1] + dc) / 2]
    roots = [ExactRoot(Fraction(0))]
    for w in ws:
        if w < 0:
            raise ValueError("Q has non-real roots")
        c, r = _sqrt_rational(w)
        if c:
            roots += [ExactRoot(c, r), ExactRoot(-c, r)]
    roots.sort(key=lambda r: r.unit_value)
    return SpectralCurveRoots(tuple(roots))


# -- numeric evaluation ---------------------------------------------------------

def sqrt_Q(p, roots: np.ndarray):
    """Branch of ``sqrt(Q(p))``: product of principal ``sqrt(p - p_i)``.

    Analytic in the open upper half plane and positive for ``p`` above the
    largest root.  Real ``p`` on a cut takes its boundary value from above.
    """
    p = np.asarray(p, dtype=complex)
    p = np.where(p.imag == 0, p.real + 0j, p)
    out = np.ones_like(p)
    for r in roots:
        out = out * np.sqrt(p - r)
    return out


@lru_cache(maxsize=32)
def _numeric(coupling, b):
    sol = nahm_solution(coupling)
    roots = quintic_roots(sol).values(b)
    Ps = [Pk.at_b(b) for Pk in sol.P]
    return sol.degree, Ps, roots


def _numeric_from(sol, b):
    return sol.degree, [Pk.at_b(b) for Pk in sol.P], quintic_roots(sol).values(b)


def _z_and_derivatives(x, b):
    sn, cn, dn = jacobi(np.asarray(x, dtype=float) * b, LEMNISCATE)
    z = cn * cn
    dz = -2.0 * b * sn * cn * dn
    d2z = -2.0 * b * b * (cn * cn * dn * dn - sn * sn * dn * dn + sn * sn * cn * cn)
    return z, dz, d2z


def _P_and_derivatives(p, z, n, Ps):
    P = np.zeros(np.broadcast(p, z).shape, dtype=complex) + np.asarray(p, dtype=complex) ** n
    Pz = np.zeros_like(P)
    Pzz = np.zeros_like(P)
    pv = np.asarray(p, dtype=complex)
    for k, c in enumerate(Ps, start=1):
        pk = pv ** (n - k)
        P = P + pk * np.polynomial.polynomial.polyval(z, c)
        dc = np.polynomial.polynomial.polyder(c)
        P_z = np.polynomial.polynomial.polyval(z, dc) if dc.size else 0.0
        d2c = np.polynomial.polynomial.polyder(c, 2)
        P_zz = np.polynomial.polynomial.polyval(z, d2c) if d2c.size else 0.0
        Pz = Pz + pk * P_z
        Pzz = Pzz + pk * P_zz
    return P, Pz, Pzz


def _branch_guard(p, roots, b):
    dist = np.min(np.abs(np.subtract.outer(np.atleast_1d(np.asarray(p, dtype=complex)), roots)))
    if dist < 1e-10 * max(1.0, b * b):
        raise ValueError("p lies on a branch point of Q")


def green_diagonal_derivatives(p, x, params: NahmParams, solution: AnsatzSolution | None = None):
    """``G, dG/dx, d^2G/dx^2`` from the exact ansatz and Jacobi derivatives of ``z``."""
    b = params.b
    if solution is None:
        n, Ps, roots = _numeric(params.coupling, b)
    else:
        n, Ps, roots = _numeric_from(solution, b)
    _branch_guard(p, roots, b)
    z, dz, d2z = _z_and_derivatives(x, b)
    P, Pz, Pzz = _P_and_derivatives(p, z, n, Ps)
    s = 2.0 * sqrt_Q(p, roots)
    G = P / s
    G1 = Pz * dz / s
    G2 = (Pzz * dz * dz + Pz * d2z) / s
    return G, G1, G2


def green_diagonal(p, x, params: NahmParams, solution: AnsatzSolution | None = None):
    """Diagonal ``G(p, x) = P(p, z(x)) / (2 sqrt(Q(p)))`` of ``(D + p)^{-1}``.

    Parameters
    ----------
    p : complex or array_like
        Spectral parameter, away from the roots of ``Q``.  The operator
        spectrum sits at ``p = -lambda``; real ``p`` on a cut gives the
        boundary value from the upper half plane.
    x : float or array_like
    params : NahmParams
        ``coupling`` 1 for the background, 0 for the free operator.
    """
    G = green_diagonal_derivatives(p, x, params, solution)[0]
    return complex(G) if G.ndim == 0 else G


def bilinear_residual(p, x, params: NahmParams, solution: AnsatzSolution | None = None):
    """``|2 G G'' - G'^2 - 4 (u + p) G^2 + 1|`` at ``(p, x)``."""
    G, G1, G2 = green_diagonal_derivatives(p, x, params, solution)
    b = params.b
    sn = jacobi(np.asarray(x, dtype=float) * b, LEMNISCATE).sn
    u = -6.0 * params.coupling * b * b * sn * sn
    r = np.abs(2.0 * G * G2 - G1 * G1 - 4.0 * (u + np.asarray(p)) * G * G + 1.0)
    return float(r) if r.ndim == 0 else r
