"""Adaptive quadrature for integrands with square-root edges.

Densities in this package vanish (or blow up) like a square root at both ends
of their support. Substituting ``x = lo + (hi - lo) sin^2(theta)`` turns those
edges into smooth behaviour, after which QUADPACK's adaptive Gauss-Kronrod
rule converges quickly.
"""
import math
import warnings

from scipy import integrate

from .errors import QuadratureError

ABS_TOL = 1e-11
MAX_SUBDIVISIONS = 500


def integrate_sqrt_edges(f, lo, hi, abs_tol=ABS_TOL, limit=MAX_SUBDIVISIONS, points=None):
    """Integrate ``f`` over ``[lo, hi]`` using the sin^2 substitution.

    ``points`` are x-locations of narrow features (passed to QUADPACK as
    breakpoints after mapping to theta). Raises QuadratureError with the achieved error estimate when QUADPACK
    reports trouble and the estimate exceeds ``abs_tol``.
    """
    if hi <= lo:
        return 0.0
    width = hi - lo

    def g(theta):
        st, ct = math.sin(theta), math.cos(theta)
        return f(lo + width * st * st) * 2.0 * width * st * ct

    thetas = None
    if points:
        thetas = sorted({math.asin(math.sqrt((x - lo) / width)) for x in points if lo < x < hi})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err, info = integrate.quad(
            g, 0.0, 0.5 * math.pi, epsabs=abs_tol * 1e-2, epsrel=1e-14,
            limit=limit, full_output=True, points=thetas or None)[:3]
    if err > abs_tol and err > 1e-13 * abs(value):
        raise QuadratureError(
            f"quadrature did not reach {abs_tol:g}; estimate {err:.3g}",
            achieved_error=err, value=value, subdivisions=info.get("last"))
    return value
