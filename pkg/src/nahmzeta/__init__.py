"""One-loop correction for the finite-gap Nahm background via spectral zeta functions.

Modules
-------
specfun    elliptic integrals, Jacobi functions and genus-1 theta series
classical  background field, potential and classical checks
hermite    exact polynomial solution of the bilinear Green-function equation
zeta       resolvent trace, spectral density, continued zeta and zeta'(0)
spectral   Hill and Floquet oracle: bands, Bloch solutions, heat trace, zeta
riemann    genus-2 curve, period matrix, theta series and Its-Matveev checks
cli        command-line front end
"""
from .classical import NahmParams
from .quadrature import QuadratureSpec
from .zeta import ZetaResult, mass_correction, zeta_prime_zero, zeta_s

__all__ = ["NahmParams", "QuadratureSpec", "ZetaResult", "zeta_s", "zeta_prime_zero",
           "mass_correction"]
__version__ = "0.1.0"
