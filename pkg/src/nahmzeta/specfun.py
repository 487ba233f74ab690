"""Elliptic special functions in real arithmetic.

Complete integrals come from the arithmetic-geometric mean, Jacobi functions
from the AGM descent (A&S 16.4) for ``0 <= m < 1`` and from the
negative-parameter transformation for ``m < 0``.  The lemniscatic case
``m = -1`` (modulus ``k = i``) is the one used throughout the package.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

__all__ = [
    "agm",
    "complete_K",
    "complete_E",
    "JacobiTriple",
    "jacobi",
    "modulus_to_parameter",
    "parameter_to_modulus",
    "theta_g1",
]

_EPS = 2.0 ** -52


class JacobiTriple(NamedTuple):
    sn: np.ndarray | float
    cn: np.ndarray | float
    dn: np.ndarray | float


def _check_parameter(m):
    m = float(m)
    if not m < 1.0:
        raise ValueError(f"elliptic parameter must satisfy m < 1, got m={m!r}")
    return m


def modulus_to_parameter(k: complex) -> float:
    """Return ``m = k**2``; purely imaginary moduli give negative parameters."""
    m = complex(k) ** 2
    if abs(m.imag) > 1e-15 * max(1.0, abs(m)):
        raise ValueError("modulus must be real or purely imaginary")
    return m.real


def parameter_to_modulus(m: float) -> complex:
    """Inverse of :func:`modulus_to_parameter` (``m < 0`` maps to ``i*sqrt(-m)``)."""
    m = float(m)
    return complex(math.sqrt(m)) if m >= 0 else complex(0.0, math.sqrt(-m))


def agm(a: float, b: float, tol: float = 4 * _EPS, maxiter: int = 64):
    """Arithmetic-geometric mean.

    Returns
    -------
    value : float
    iterations : int
        Number of AGM steps taken before ``|a - b| <= tol * a``.
    """
    a, b = float(a), float(b)
    if a <= 0 or b <= 0:
        raise ValueError("agm needs positive arguments")
    for n in range(maxiter):
        if abs(a - b) <= tol * a:
            return 0.5 * (a + b), n
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    raise RuntimeError("AGM did not converge")


def complete_K(m: float, tol: float = 4 * _EPS) -> float:
    """Complete elliptic integral of the first kind, ``K(m)``.

    ``K(m) = int_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt`` for ``m < 1``.
    """
    m = _check_parameter(m)
    value, _ = agm(1.0, math.sqrt(1.0 - m), tol)
    return math.pi / (2.0 * value)


def complete_E(m: float, tol: float = 4 * _EPS) -> float:
    """Complete elliptic integral of the second kind, ``E(m)``, for ``m < 1``."""
    m = _check_parameter(m)
    a, b = 1.0, math.sqrt(1.0 - m)
    # running sum of 2^(n-1) c_n^2 with c_0^2 = m
    acc = 0.5 * m
    power = 0.5
    for _ in range(64):
        if abs(a - b) <= tol * a:
            break
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        power *= 2.0
        acc += power * c * c
    else:
        raise RuntimeError("AGM did not converge")
    return math.pi / (2.0 * a) * (1.0 - acc)


def _jacobi_unit(u, m):
    """sn, cn, dn for 0 <= m < 1 by AGM descent; ``u`` is an ndarray."""
    if m == 0.0:
        return np.sin(u), np.cos(u), np.ones_like(u)
    a = [1.0]
    c = [math.sqrt(m)]
    b = math.sqrt(1.0 - m)
    while abs(c[-1]) > _EPS:
        an, bn = a[-1], b
        a.append(0.5 * (an + bn))
        c.append(0.5 * (an - bn))
        b = math.sqrt(an * bn)
        if len(a) > 40:
            break
    n = len(a) - 1
    phi = (2.0 ** n) * a[-1] * u
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(np.clip(c[j] / a[j] * np.sin(phi), -1.0, 1.0)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(1.0 - m * sn * sn)
    return sn, cn, dn


def jacobi(u, m: float) -> JacobiTriple:
    """Jacobi elliptic functions ``sn, cn, dn`` of real argument.

    Parameters
    ----------
    u : float or array_like
        Real argument.
    m : float
        Parameter ``m = k**2 < 1``.  For ``m < 0`` the reciprocal transform
        ``sn(u|m) = sd(v|mu)/sqrt(1-m)``, ``cn(u|m) = cd(v|mu)``,
        ``dn(u|m) = nd(v|mu)`` with ``mu = -m/(1-m)``, ``v = u*sqrt(1-m)``
        keeps everything real.

    Returns
    -------
    JacobiTriple
        Scalars for scalar input, arrays otherwise.
    """
    m = _check_parameter(m)
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    if m < 0.0:
        mu = -m / (1.0 - m)
        root = math.sqrt(1.0 - m)
        v = u * root
        s, c, d = _reduced(v, mu)
        out = (s / (d * root), c / d, 1.0 / d)
    else:
        out = _reduced(u, m)
    if scalar:
        return JacobiTriple(*(float(x) for x in out))
    return JacobiTriple(*out)


def _reduced(u, m):
    # reduce modulo the real period 4K before the descent
    quarter = complete_K(m)
    period = 4.0 * quarter
    r = np.mod(u, period)
    return _jacobi_unit(r, m)


def theta_g1(v, q: float, kind: int, N: int | None = None, tol: float = 1e-16):
    """Jacobi theta function ``theta_kind(v, q)`` by direct summation.

    Uses the convention ``theta_3(v, q) = 1 + 2 sum q^{n^2} cos(2 n v)``.

    Returns
    -------
    value : float or ndarray
    tail_bound : float
        Bound on the discarded terms, ``2 sum_{n>N} q^{n^2}`` style.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("nome must lie in (0, 1)")
    if kind not in (1, 2, 3, 4):
        raise ValueError("kind must be 1, 2, 3 or 4")
    v = np.asarray(v, dtype=float)

    def tail(n0):
        # terms decay with ratio <= q^(2 n0 + 1) beyond the exponent (n0 + shift)^2
        shift = 0.5 if kind in (1, 2) else 0.0
        e = (n0 + 1 + shift) ** 2
        return 2.0 * q ** e / (1.0 - q ** (2 * n0 + 3))

    if N is None:
        N = 1
        while tail(N) > tol and N < 10_000:
            N += 1
    total = np.zeros_like(v)
    if kind in (1, 2):
        for n in range(N + 1):
            w = q ** ((n + 0.5) ** 2)
            if kind == 1:
                total = total + 2.0 * (-1) ** n * w * np.sin((2 * n + 1) * v)
            else:
                total = total + 2.0 * w * np.cos((2 * n + 1) * v)
    else:
        total = total + 1.0
        for n in range(1, N + 1):
            sign = (-1) ** n if kind == 4 else 1
            total = total + 2.0 * sign * q ** (n * n) * np.cos(2 * n * v)
    value = float(total) if total.ndim == 0 else total
    return value, tail(N)
