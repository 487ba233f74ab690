"""Direct numerical treatment of the periodic Schroedinger operator.

Everything here works from samples of ``u(x)`` alone and never touches the
exact ansatz, so it serves as an independent oracle:

* Hill's method gives band functions ``lambda_j(theta)`` for Bloch phase
  ``theta``; spectral integrals per period are
  ``int g rho d lambda = sum_j (1/pi) int_0^pi g(lambda_j(theta)) d theta``.
* The Floquet discriminant ``Delta(lambda)`` (half trace of the monodromy)
  comes from ODE integration and yields a second density route and the
  Taylor data used near the band edge at ``lambda = 0``.
* Bloch solutions and the Wronskian give the resolvent kernel.

The spectral parameter is the energy ``h`` (eigenvalue of
``-d^2/dx^2 + u``) in the physical variable ``x``.
"""
from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special
from scipy.integrate import solve_ivp

from .classical import NahmParams, period, potential
from .quadrature import fsum_complex, gauss_legendre_nodes
from .zeta import ZetaResult

__all__ = [
    "BandStructure",
    "BlochPair",
    "hill_matrices",
    "band_functions",
    "hill_band_edges",
    "floquet_discriminant",
    "floquet_density",
    "counting_function",
    "bloch_solutions",
    "green_spectral",
    "heat_coefficients",
    "heat_trace",
    "zeta_oracle",
]

GAP_TOL = 1e-7


@dataclass(frozen=True)
class BandStructure:
    """Edges of the open bands and the raw periodic/antiperiodic spectra."""

    edges: tuple
    periodic: tuple
    antiperiodic: tuple
    convergence: float
    N: int

    @property
    def bands(self):
        e = list(self.edges)
        out = [(e[i], e[i + 1]) for i in range(0, len(e) - 1, 2)]
        return out + [(e[-1], math.inf)]

    def to_json(self) -> dict:
        return {"edges": list(self.edges), "bands": [[a, b] for a, b in self.bands],
                "convergence": self.convergence, "N": self.N}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "edge"])
        for i, e in enumerate(self.edges):
            w.writerow([i, repr(float(e))])
        return buf.getvalue()


# -- Hill's method ---------------------------------------------------------------

@lru_cache(maxsize=16)
def _fourier(b, coupling, N):
    """Fourier coefficients ``u_k``, ``|k| <= 2N``, of ``u`` over one period."""
    params = NahmParams(b=b, coupling=coupling)
    M = 8 * N
    L = period(params)
    x = np.arange(M) * (L / M)
    c = np.fft.fft(potential(x, params)) / M
    k = np.arange(-2 * N, 2 * N + 1)
    return c[k % M].real, L


def hill_matrices(theta, params: NahmParams, N: int = 64):
    """Stack of Hill matrices for Bloch phases ``theta`` (modes ``-N..N``)."""
    if N < 16:
        raise ValueError("Hill's method needs N >= 16 Fourier modes")
    uk, L = _fourier(params.b, params.coupling, N)
    n = np.arange(-N, N + 1)
    idx = n[:, None] - n[None, :] + 2 * N
    T = uk[idx]
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    kin = ((2 * math.pi * n[None, :] + theta[:, None]) / L) ** 2
    H = np.broadcast_to(T, (theta.size,) + T.shape).copy()
    H[:, np.arange(2 * N + 1), np.arange(2 * N + 1)] += kin
    return H


def band_functions(theta, params: NahmParams, N: int = 64) -> np.ndarray:
    """Sorted eigenvalues ``lambda_j(theta)``; shape ``(len(theta), 2N+1)``."""
    return np.linalg.eigvalsh(hill_matrices(theta, params, N))


def _edges_from(per, anti, scale):
    lo = np.minimum(per, anti)
    hi = np.maximum(per, anti)
    edges = [lo[0]]
    for j in range(len(lo) - 1):
        if lo[j + 1] - hi[j] > GAP_TOL * scale:
            edges += [hi[j], lo[j + 1]]
    return edges


def hill_band_edges(params: NahmParams, N: int = 64, n_check: int = 12) -> BandStructure:
    """Band edges from periodic (``theta = 0``) and antiperiodic (``theta = pi``) spectra.

    Only the lowest ``n_check`` bands are inspected for open gaps; the
    result is compared against ``2N`` modes and the change reported as
    ``convergence``.
    """
    scale = max(params.b ** 2, 1.0)
    res = []
    for n in (N, 2 * N):
        ev = band_functions([0.0, math.pi], params, n)
        res.append((ev[0, :n_check], ev[1, :n_check]))
    (per, anti), (per2, anti2) = res
    edges = _edges_from(per, anti, scale)
    edges2 = _edges_from(per2, anti2, scale)
    if len(edges) != len(edges2):
        raise RuntimeError("band structure not converged: gap count changes with N")
    conv = float(np.max(np.abs(np.array(edges) - np.array(edges2))))
    if conv > 1e-8 * scale:
        raise RuntimeError(f"band edges not converged (change {conv:.2e}); increase N")
    return BandStructure(tuple(float(e) for e in edges), tuple(per), tuple(anti), conv, N)


def counting_function(lam: float, params: NahmParams, N: int = 64) -> float:
    """Number of states per period below ``lam`` (integrated density of states)."""
    ev = band_functions([0.0, math.pi], params, N)
    total = 0.0
    for j in range(ev.shape[1] - N):
        a, b = ev[0, j], ev[1, j]
        lo, hi = min(a, b), max(a, b)
        if lam >= hi:
            total += 1.0
        elif lam > lo:
            f = lambda th: band_functions([th], params, N)[0, j] - lam
            th = optimize.brentq(f, 0.0, math.pi, xtol=1e-15, rtol=1e-15)
            total += th / math.pi if a < b else 1.0 - th / math.pi
        else:
            break
    return total


# -- Floquet theory --------------------------------------------------------------

def _monodromy(lams, params: NahmParams, rtol=1e-13, atol=1e-15, with_derivative=True):
    """Fundamental solutions over one period for many ``lambda`` at once."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    L = period(params)
    m = lams.size

    def rhs(x, Y):
        Y = Y.reshape(-1, m)
        u = potential(x, params)
        q = u - lams
        out = np.empty_like(Y)
        out[0], out[1] = Y[1], q * Y[0]
        out[2], out[3] = Y[3], q * Y[2]
        if with_derivative:
            out[4], out[5] = Y[5], q * Y[4] - Y[0]
            out[6], out[7] = Y[7], q * Y[6] - Y[2]
        return out.ravel()

    nvar = 8 if with_derivative else 4
    Y0 = np.zeros((nvar, m), dtype=complex)
    Y0[0] = 1.0
    Y0[3] = 1.0
    sol = solve_ivp(rhs, (0.0, L), Y0.ravel(), method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"monodromy integration failed: {sol.message}")
    return sol.y[:, -1].reshape(nvar, m)


def floquet_discriminant(lam, params: NahmParams):
    """``Delta(lambda) = (y1(L) + y2'(L)) / 2`` and ``dDelta/dlambda``."""
    Y = _monodromy(lam, params)
    D = 0.5 * (Y[0] + Y[3])
    dD = 0.5 * (Y[4] + Y[7])
    if np.ndim(lam) == 0:
        return complex(D[0]), complex(dD[0])
    return D, dD


def floquet_density(lam, params: NahmParams):
    """Density of states per period, ``(1/pi) |Delta'| / sqrt(1 - Delta^2)``; zero in gaps."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    D, dD = floquet_discriminant(lam + 0j, params)
    D = D.real
    rho = np.where(np.abs(D) < 1, np.abs(dD.real) / (math.pi * np.sqrt(np.clip(1 - D * D, 1e-300, None))), 0.0)
    return rho if rho.size > 1 else float(rho[0])


@lru_cache(maxsize=8)
def _edge_taylor(b, coupling, radius_factor=2.0, M=128):
    """Taylor coefficients of ``sqrt(lam) rho(lam)`` at the band edge ``lam = 0``.

    ``(1 - Delta^2)/lambda`` is analytic and zero-free inside the circle
    ``|lambda| = radius_factor * b^2``; its square root is continued along the
    circle and the coefficients are read off by FFT.
    """
    params = NahmParams(b=b, coupling=coupling)
    r = radius_factor * b * b
    phi = 2 * math.pi * np.arange(M) / M
    lam = r * np.exp(1j * phi)
    D, dD = floquet_discriminant(lam, params)
    h = (1 - D) * (1 + D) / lam
    phase = np.unwrap(np.angle(h))
    root = np.sqrt(np.abs(h)) * np.exp(0.5j * phase)
    f = dD / (math.pi * root)
    if f[0].real < 0:
        f = -f
    c = np.fft.fft(f) / M
    k = np.arange(M)
    coeffs = (c / r ** k).real
    return coeffs[: M // 2]


# -- Bloch solutions and the resolvent -------------------------------------------

@dataclass
class BlochPair:
    """Bloch solutions for energy ``h``: ``psi_plus`` grows toward ``+inf``.

    ``psi_plus`` decays at ``-inf`` and ``psi_minus`` at ``+inf``; for even
    potentials ``psi_minus(y) = psi_plus(-y)``.  Values on ``grid`` are
    stored together with derivatives; :meth:`evaluate` extends them to any
    ``y`` through the Floquet multipliers.
    """

    h: complex
    grid: np.ndarray
    psi_plus: np.ndarray
    dpsi_plus: np.ndarray
    psi_minus: np.ndarray
    dpsi_minus: np.ndarray
    multipliers: tuple
    wronskian: complex
    wronskian_drift: float
    _vectors: tuple = ()
    _params: NahmParams | None = None

    def evaluate(self, y, which: str = "plus"):
        """``psi, psi'`` at arbitrary ``y`` by integration and Floquet extension."""
        return _bloch_eval(self, np.atleast_1d(np.asarray(y, dtype=float)), which)


def _fundamental(h, params, xs):
    """``(y1, y1', y2, y2')`` sampled at sorted ``xs`` in ``[0, L]``."""
    L = period(params)

    def rhs(x, Y):
        q = potential(x, params) - h
        return np.array([Y[1], q * Y[0], Y[3], q * Y[2]])

    xs = np.asarray(xs, dtype=float)
    t_eval = np.unique(np.concatenate([xs, [L]]))
    sol = solve_ivp(rhs, (0.0, L), np.array([1, 0, 0, 1], dtype=complex), method="DOP853",
                    rtol=1e-13, atol=1e-15, t_eval=t_eval)
    if not sol.success:
        raise RuntimeError(sol.message)
    return t_eval, sol.y


def bloch_solutions(h, params: NahmParams, grid=None) -> BlochPair:
    """Bloch pair at energy ``h`` off the spectrum.

    Parameters
    ----------
    h : complex
        Energy; real values must lie in a gap or below the spectrum.
    grid : array_like, optional
        Points in ``[0, L]``; default is 65 uniform points.
    """
    h = complex(h)
    L = period(params)
    grid = np.linspace(0.0, L, 65) if grid is None else np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid > L):
        raise ValueError("grid must lie within one period [0, L]")
    t, Y = _fundamental(h, params, grid)
    M = np.array([[Y[0, -1], Y[2, -1]], [Y[1, -1], Y[3, -1]]])
    mu, V = np.linalg.eig(M)
    order = np.argsort(-np.abs(mu))
    mu, V = mu[order], V[:, order]
    if abs(abs(mu[0]) - abs(mu[1])) < 1e-9 * max(1.0, abs(mu[0])):
        raise ValueError("h lies on the spectrum or at a band edge (degenerate Floquet multipliers)")
    # psi = c1 y1 + c2 y2 with (c1, c2) an eigenvector of the monodromy
    idx = np.searchsorted(t, grid)
    def combo(v):
        psi = v[0] * Y[0, idx] + v[1] * Y[2, idx]
        dpsi = v[0] * Y[1, idx] + v[1] * Y[3, idx]
        return psi, dpsi
    vp = V[:, 0] / V[0, 0] if abs(V[0, 0]) > 1e-12 else V[:, 0]
    # det M = 1; the small multiplier is inaccurate when taken from eig directly
    mu = (complex(mu[0]), 1.0 / complex(mu[0]))
    pp, dpp = combo(vp)
    pair = BlochPair(h, grid, pp, dpp, pp, dpp, mu, 0j, 0.0, (vp,), params)
    pm, dpm = _bloch_eval(pair, grid, "minus")
    W = pp * dpm - dpp * pm
    w0 = W[0]
    drift = float(np.max(np.abs(W - w0)) / abs(w0))
    return BlochPair(h, grid, pp, dpp, pm, dpm, mu, complex(w0), drift, (vp,), params)


def _bloch_eval(pair: BlochPair, y, which):
    if which == "minus":
        # the potential is even, so psi_-(y) = psi_+(-y); psi_+ is the stable direction
        psi, dpsi = _bloch_eval(pair, -y, "plus")
        return psi, -dpsi
    params = pair._params
    L = period(params)
    v = pair._vectors[0]
    mu = pair.multipliers[0]
    n = np.floor(y / L)
    r = y - n * L
    order = np.argsort(r)
    t, Y = _fundamental(pair.h, params, r[order])
    idx = np.searchsorted(t, r[order])
    psi = np.empty(y.size, dtype=complex)
    dpsi = np.empty(y.size, dtype=complex)
    psi[order] = v[0] * Y[0, idx] + v[1] * Y[2, idx]
    dpsi[order] = v[0] * Y[1, idx] + v[1] * Y[3, idx]
    fac = mu ** n
    return psi * fac, dpsi * fac


def green_spectral(h, y, y0, params: NahmParams, derivative: bool = False):
    """Resolvent kernel ``(D - h)^{-1}(y, y0) = -psi_+(y_<) psi_-(y_>) / W``.

    ``W = psi_+ psi_-' - psi_+' psi_-``, so ``dg/dy`` jumps by ``-1`` at
    ``y = y0``.  With ``derivative`` the ``y``-derivative is returned as well
    (one-sided from the side ``y`` lies on).
    """
    pair = bloch_solutions(h, params, np.array([0.0]))
    y = float(y)
    y0 = float(y0)
    lo, hi = (y, y0) if y <= y0 else (y0, y)
    pp, dpp = pair.evaluate([lo], "plus")
    pm, dpm = pair.evaluate([hi], "minus")
    W = pair.wronskian
    g = complex(-pp[0] * pm[0] / W)
    if not derivative:
        return g
    dg = -(dpp[0] * pm[0]) / W if y < y0 else -(pp[0] * dpm[0]) / W
    return g, complex(dg)


# -- heat trace ------------------------------------------------------------------

def heat_coefficients(params: NahmParams, M: int = 1024):
    """Integrated heat invariants ``A_0 .. A_3`` over one period.

    ``A_0 = L``, ``A_1 = -int u``, ``A_2 = int u^2 / 2``,
    ``A_3 = -int u^3 / 6 - int u'^2 / 12``; ``u'`` by spectral differentiation.
    """
    L = period(params)
    x = np.arange(M) * (L / M)
    u = potential(x, params)
    k = np.fft.fftfreq(M, d=L / M) * 2 * math.pi
    du = np.fft.ifft(1j * k * np.fft.fft(u)).real
    mean = lambda f: L * math.fsum(f) / M
    return np.array([L, -mean(u), 0.5 * mean(u * u), -mean(u ** 3) / 6 - mean(du * du) / 12])


@lru_cache(maxsize=8)
def _grid(b, coupling, N, n_theta, lam_cut_factor):
    """Band functions on Gauss-Legendre theta nodes plus the cut-off band index."""
    params = NahmParams(b=b, coupling=coupling)
    th, w = gauss_legendre_nodes(0.0, math.pi, 2, n_theta // 2)
    ev = band_functions(th, params, N)
    ends = band_functions([0.0, math.pi], params, N)
    top = np.max(ends, axis=0)
    target = lam_cut_factor * b * b
    J = int(np.searchsorted(top, target))
    # band J lives near Fourier mode J/2, well resolved while J <= N
    if J > N:
        raise RuntimeError("Hill truncation too small for the requested cut-off")
    return th, w, ev, ends, J, float(top[J])


def _tail_density_terms(params):
    """``(coef, power)`` pairs: ``rho ~ sum coef * lam^power`` for large ``lam``."""
    A = heat_coefficients(params)
    out = []
    for k, Ak in enumerate(A):
        out.append((Ak / (math.sqrt(4 * math.pi) * special.gamma(0.5 - k)), -k - 0.5))
    return out


def _upper_gamma_half(k, x):
    """``Gamma(1/2 - k, x)`` for ``k >= 0`` by downward recurrence from ``Gamma(1/2, x)``."""
    g = math.sqrt(math.pi) * special.erfc(math.sqrt(x))
    a = 0.5
    for _ in range(k):
        # Gamma(a - 1, x) = (Gamma(a, x) - x^(a-1) e^-x) / (a - 1)
        g = (g - x ** (a - 1) * math.exp(-x)) / (a - 1)
        a -= 1
    return g


def heat_trace(t: float, params: NahmParams, N: int = 64, n_theta: int = 64,
               kind: str = "bloch", lam_cut_factor: float = 3000.0) -> float:
    """Heat trace per period, ``int exp(-lambda t) rho(lambda) d lambda``.

    ``kind="bloch"`` integrates over all Bloch phases (the operator on the
    line, per period); bands up to ``lam_cut_factor * b^2`` come from
    Hill's method and the remainder from the heat-invariant expansion of
    the density.  ``kind="periodic"`` is the trace on the circle of length
    ``L``, from ``theta = 0`` eigenvalues plus the same asymptotic tail.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    th, w, ev, ends, J, lam_cut = _grid(params.b, params.coupling, N, n_theta, lam_cut_factor)
    if kind == "bloch":
        body = math.fsum((w[:, None] * np.exp(-ev[:, : J + 1] * t)).ravel()) / math.pi
    elif kind == "periodic":
        per = ends[0, : 2 * N + 1]
        body = math.fsum(np.exp(-per[per <= lam_cut] * t))
    else:
        raise ValueError("kind must be 'bloch' or 'periodic'")
    tail = 0.0
    x = lam_cut * t
    for k, (c, _) in enumerate(_tail_density_terms(params)):
        tail += c * t ** (k - 0.5) * _upper_gamma_half(k, x)
    return body + tail


# -- zeta oracle -----------------------------------------------------------------

def _term(c, X, gamma, s):
    """``c X^(gamma-s)/(gamma-s)`` with its finite part and residue at the pole."""
    d = gamma - s
    if abs(d) < 1e-12:
        return c * math.log(X), -c
    return c * cmath.exp(d * math.log(X)) / d, 0j


def _zeta_bands(s, params, N, n_theta, lam_cut_factor):
    th, w, ev, ends, J, lam_cut = _grid(params.b, params.coupling, N, n_theta, lam_cut_factor)
    pw = lambda lam: np.exp(-s * np.log(lam + 0j))
    total, residue, mag = 0j, 0j, 0.0
    zero_band = None
    for j in range(J + 1):
        lo = min(ends[0, j], ends[1, j])
        if abs(lo) < 1e-8 * params.b ** 2:
            zero_band = j
            continue
        v = fsum_complex(w * pw(ev[:, j])) / math.pi
        total += v
        mag += abs(v)
    if zero_band is not None:
        j = zero_band
        e_top = max(ends[0, j], ends[1, j])
        edge_at_pi = abs(ends[1, j]) < abs(ends[0, j])
        a = 0.5 * e_top
        fj = lambda th_: band_functions([th_], params, N)[0, j] - a
        tha = optimize.brentq(fj, 0.0, math.pi, xtol=1e-15, rtol=1e-15)
        lo_th, hi_th = (0.0, tha) if edge_at_pi else (tha, math.pi)
        t2, w2 = gauss_legendre_nodes(lo_th, hi_th, 2, n_theta // 2)
        lam2 = band_functions(t2, params, N)[:, j]
        v = fsum_complex(w2 * pw(lam2)) / math.pi
        total += v
        mag += abs(v)
        coeffs = _edge_taylor(params.b, params.coupling)
        for k, c in enumerate(coeffs):
            v, r = _term(c, a, k + 0.5, s)
            total += v
            mag += abs(v)
            residue += r
    for c, power in _tail_density_terms(params):
        v, r = _term(-c, lam_cut, power + 1.0, s)
        total += v
        mag += abs(v)
        residue += r
    return total, residue, mag


def zeta_oracle(s, params: NahmParams, subtraction: str = "vacuum", N: int = 64,
                n_theta: int = 64, lam_cut_factor: float = 3000.0) -> ZetaResult:
    """Zeta function per unit length from band functions (independent route).

    The continuation mirrors the exact route but with independent data:
    Hill band functions in the bulk, Floquet-discriminant Taylor
    coefficients at the ``lambda = 0`` edge, heat invariants beyond the
    cut-off.  The continued free zeta vanishes identically, so the vacuum
    term contributes zero.  The error estimate is the change under halving
    the number of theta nodes.  ``d`` must be 1.
    """
    if subtraction not in ("none", "vacuum"):
        raise ValueError("subtraction must be 'none' or 'vacuum'")
    if params.d != 1:
        raise ValueError("zeta_oracle handles d = 1 only")
    s = complex(s)
    L = period(params)
    if params.coupling == 0:
        val, coarse, res, mag = 0j, 0j, 0j, 0.0
    else:
        val, res, mag = _zeta_bands(s, params, N, n_theta, lam_cut_factor)
        coarse, _, _ = _zeta_bands(s, params, N, n_theta // 2, lam_cut_factor)
        val, coarse, res, mag = val / L, coarse / L, res / L, mag / L
    if subtraction == "vacuum":
        val, coarse, res = -val, -coarse, -res
    return ZetaResult(val, abs(val - coarse), "spectral", subtraction, params, None, s,
                      "zeta", complex(res), {"N": N, "n_theta": n_theta, "scale": float(mag)})
