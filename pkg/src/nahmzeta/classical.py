"""Classical background of the reduced Yang-Mills-Nahm model.

The scalar field obeys ``phi'' = 2 phi^3`` with first integral
``(phi')^2 = phi^4 - b^4``.  The package works on the bounded periodic
branch

    phi(x) = i * b * sn(b x | -1),    u(x) = 6 phi^2 = -6 b^2 sn^2(b x | -1),

which is real in the potential ``u`` although the field itself is purely
imaginary.  ``FieldSample.phi`` stores the real amplitude ``b sn(bx|-1)``;
the physical field is ``1j * phi``.  The real but singular branch
``phi = b nc(sqrt(2) b x | 1/2)`` is available to the residual checks.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .quadrature import tanh_sinh_nodes, fsum_complex
from .specfun import complete_K, jacobi

__all__ = [
    "NahmParams",
    "FieldSample",
    "LEMNISCATE",
    "period",
    "potential",
    "field",
    "check_matrix_constraint",
    "first_integral_residual",
    "field_residuals",
    "lagrangian_density",
    "lagrangian_from_field",
    "invert_lemniscate",
]

LEMNISCATE = -1.0  # parameter m = k^2 for modulus k = i


@dataclass(frozen=True)
class NahmParams:
    """Free constants of the model.

    ``coupling`` scales the potential; ``1`` is the Nahm background and
    ``0`` the free operator with the same period.
    """

    b: float = 1.0
    hbar: float = 1.0
    d: int = 1
    coupling: float = 1.0

    def __post_init__(self):
        if not (isinstance(self.b, (int, float)) and self.b > 0 and math.isfinite(self.b)):
            raise ValueError(f"b must be a positive finite number, got {self.b!r}")
        if not self.hbar >= 0:
            raise ValueError("hbar must be non-negative")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be an integer >= 1")

    @property
    def free(self) -> bool:
        return self.coupling == 0

    def to_dict(self) -> dict:
        return asdict(self)


class FieldSample(NamedTuple):
    x: float
    phi: float
    dphi: float
    u: float
    z: float


def period(params: NahmParams) -> float:
    """Period ``2 K(-1) / b`` of the potential (half the period of ``phi``)."""
    return 2.0 * complete_K(LEMNISCATE) / params.b


def potential(x, params: NahmParams):
    """``u(x) = -6 b^2 sn^2(b x | -1)`` times ``params.coupling``."""
    sn = jacobi(np.asarray(x, dtype=float) * params.b, LEMNISCATE).sn
    return -6.0 * params.coupling * params.b ** 2 * np.square(sn)


def field(x: float, params: NahmParams) -> FieldSample:
    """Sample the canonical background at ``x``."""
    b = params.b
    sn, cn, dn = jacobi(b * x, LEMNISCATE)
    phi = b * sn
    dphi = b * b * cn * dn
    u = -6.0 * params.coupling * phi * phi
    return FieldSample(float(x), phi, dphi, u, cn * cn)


# -- matrix ansatz, exact arithmetic -------------------------------------------
# complex rationals are (re, im) pairs of Fractions; matrices are 2x2 tuples

def _c_mul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _c_add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _m_mul(A, B):
    return tuple(
        tuple(_c_add(_c_mul(A[i][0], B[0][j]), _c_mul(A[i][1], B[1][j])) for j in range(2))
        for i in range(2))


def _m_lin(alpha, A, beta, B):
    return tuple(
        tuple(_c_add(_c_mul(alpha, A[i][j]), _c_mul(beta, B[i][j])) for j in range(2))
        for i in range(2))


def _pauli():
    z, o = Fraction(0), Fraction(1)
    zero, one, i_ = (z, z), (o, z), (z, o)
    neg_one, neg_i = (-o, z), (z, -o)
    return (
        ((zero, one), (one, zero)),
        ((zero, neg_i), (i_, zero)),
        ((one, zero), (zero, neg_one)),
    )


def _commutator(A, B):
    one = (Fraction(1), Fraction(0))
    return _m_lin(one, _m_mul(A, B), (Fraction(-1), Fraction(0)), _m_mul(B, A))


def check_matrix_constraint(scale) -> Fraction:
    """Max-norm of ``2 a_i - sum_j [a_j, [a_j, a_i]]`` for ``a_i = scale * sigma_i``.

    ``scale`` is converted to a :class:`fractions.Fraction`; the computation
    is exact, so the constraint holds iff the result is ``0``.
    """
    c = Fraction(scale)
    cc = (c, Fraction(0))
    zero = (Fraction(0), Fraction(0))
    alphas = [_m_lin(cc, s, zero, s) for s in _pauli()]
    two = (Fraction(2), Fraction(0))
    worst = Fraction(0)
    for ai in alphas:
        acc = _m_lin(two, ai, zero, ai)
        for aj in alphas:
            acc = _m_lin((Fraction(1), Fraction(0)), acc, (Fraction(-1), Fraction(0)),
                         _commutator(aj, _commutator(aj, ai)))
        for row in acc:
            for re, im in row:
                worst = max(worst, abs(re), abs(im))
    return worst


# -- field equations -----------------------------------------------------------

def _canonical_derivatives(x, b):
    sn, cn, dn = jacobi(b * x, LEMNISCATE)
    amp = b * sn
    d1 = b * b * cn * dn
    # d/du (cn dn) = -sn dn^2 + m sn cn^2 with m = -1
    d2 = b ** 3 * (-sn * dn * dn + sn * cn * cn)
    return 1j * amp, 1j * d1, 1j * d2


def _unbounded_derivatives(x, b):
    r2 = math.sqrt(2.0)
    sn, cn, dn = jacobi(r2 * b * x, 0.5)
    m = 0.5
    phi = b / cn
    d1 = r2 * b * b * sn * dn / cn ** 2
    d2 = 2.0 * b ** 3 * ((dn * dn - m * sn * sn) / cn + 2.0 * sn * sn * dn * dn / cn ** 3)
    return phi, d1, d2


def field_residuals(phi, dphi, d2phi, b):
    """``|phi'^2 - phi^4 + b^4|`` and ``|phi'' - 2 phi^3|`` for given samples."""
    first = abs(dphi * dphi - phi ** 4 + b ** 4)
    second = abs(d2phi - 2.0 * phi ** 3)
    return first, second


def first_integral_residual(x: float, params: NahmParams, branch: str = "canonical",
                            fd_step: float | None = None):
    """Residuals of the first integral and of ``phi'' = 2 phi^3`` at ``x``.

    ``branch="canonical"`` uses ``phi = i b sn(bx|-1)``; ``"unbounded"``
    uses the real solution ``b nc(sqrt(2) b x | 1/2)``, which has poles at
    ``sqrt(2) b x = (2n+1) K(1/2)``.  With ``fd_step`` the derivatives come
    from central differences instead of closed forms.
    """
    b = params.b
    if branch == "canonical":
        evaluate = _canonical_derivatives
    elif branch == "unbounded":
        evaluate = _unbounded_derivatives
    else:
        raise ValueError("branch must be 'canonical' or 'unbounded'")
    phi, d1, d2 = evaluate(x, b)
    if fd_step is not None:
        h = fd_step
        fp, fm = evaluate(x + h, b)[0], evaluate(x - h, b)[0]
        d1 = (fp - fm) / (2 * h)
        d2 = (fp - 2 * phi + fm) / (h * h)
    return field_residuals(phi, d1, d2, b)


# -- Lagrangian density --------------------------------------------------------

_SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _levi_civita(i, k, l):
    return (i - k) * (k - l) * (l - i) / 2


def lagrangian_from_field(phi, dphi):
    """``T_{mu nu} T^{mu nu}`` from field values, by matrices and in closed form.

    Returns
    -------
    matrix_value, closed_form : complex
        The first assembles ``T_0i = phi' sigma_i`` and
        ``T_ik = 2 phi^2 eps_ikl sigma_l`` explicitly; the second is
        ``3 (phi'^2 + 8 phi^4)``.
    """
    total = np.zeros((2, 2), dtype=complex)
    for i in range(3):
        t0i = dphi * _SIGMA[i]
        total += t0i @ t0i
        for k in range(3):
            tik = sum(2.0 * phi * phi * _levi_civita(i, k, l) * _SIGMA[l] for l in range(3))
            total += tik @ tik
    matrix_value = 0.5 * np.trace(total)
    closed = 3.0 * (dphi * dphi + 8.0 * phi ** 4)
    return complex(matrix_value), complex(closed)


def lagrangian_density(x: float, params: NahmParams):
    """Lagrangian density of the canonical background at ``x`` (both routes)."""
    phi, d1, _ = _canonical_derivatives(x, params.b)
    return lagrangian_from_field(phi, d1)


# -- lemniscate inversion ------------------------------------------------------

def invert_lemniscate(phi: float, params: NahmParams, dphi: float | None = None,
                      level: int = 6) -> float:
    """Invert ``phi = b sn(b x | -1)`` by quadrature of the lemniscate integral.

    The principal value ``x = int_0^phi dpsi / sqrt(b^4 - psi^4)`` lies in
    ``[-K/b, K/b]``.  Passing the sign of ``phi'`` through ``dphi`` selects
    the other half period, ``x = 2K/b - x_principal``, when ``dphi < 0``.
    """
    b = params.b
    t_end = phi / b
    if abs(t_end) > 1.0 + 1e-15:
        raise ValueError(f"|phi| must not exceed b on the canonical branch, got {phi!r}")
    t_end = max(-1.0, min(1.0, t_end))
    sign = 1.0 if t_end >= 0 else -1.0
    T = abs(t_end)
    if T == 0.0:
        x = 0.0
    else:
        t, _, dist_end, w = tanh_sinh_nodes(0.0, T, level)
        one_minus = (1.0 - T) + dist_end
        integrand = 1.0 / np.sqrt(one_minus * (1.0 + t) * (1.0 + t * t))
        x = sign * fsum_complex(w * integrand) / b
    if dphi is not None and dphi < 0:
        x = 2.0 * complete_K(LEMNISCATE) / b - x
    return float(x)
