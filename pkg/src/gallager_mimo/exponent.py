"""Large-N Gallager exponent E(r) and its limiting regimes.

Exponents are normalized by N^2 and rates are per antenna, both in nats.
The closed forms below evaluate E at a converged saddle point; the
quadrature route in :func:`exponent_at_solution_quadrature` is kept as an
independent check of them.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from scipy.optimize import brentq

from . import rmt_core as rmt
from .errors import InvalidParams, NoConvergence
from .rmt_core import ChannelParams, g_kernel, mp_support
from .quadrature import integrate_sqrt_edges
from .saddlepoint import (AVERAGE, PEAK, SPHERE, check_mode, pstar_density,
                          pstar_integral, pstar_log_moment, rho_of_rate)

ZERO, CLAMPED, INTERIOR = "zero", "clamped", "interior"
NEAR_ERGODIC = 1e-6


@dataclass(frozen=True)
class ExponentPoint:
    r: float
    e: float
    rho: float
    s: float
    a: float
    b: float
    mode: str
    regime: str
    status: str = "ok"


@dataclass
class CurveTable:
    params: ChannelParams
    mode: str
    rows: list = field(default_factory=list)

    def __post_init__(self):
        rs = [row.r for row in self.rows]
        if any(r1 >= r2 for r1, r2 in zip(rs, rs[1:])):
            raise InvalidParams("curve rows must be strictly increasing in r")

    @property
    def r(self):
        return [row.r for row in self.rows]

    @property
    def e(self):
        return [row.e for row in self.rows]


def rate_function_constant(beta):
    """(3 beta - beta^2 log beta + (beta-1)^2 log(beta-1)) / 2, with 0 log 0 = 0."""
    tail = 0.0 if beta == 1.0 else (beta - 1.0) ** 2 * math.log(beta - 1.0)
    return 0.5 * (3.0 * beta - beta * beta * math.log(beta) + tail)


def _power_term(sol):
    return (1.0 + sol.rho) * (sol.s + math.log1p(-sol.s))


def exponent_closed_form(sol, r, params):
    """E at a converged saddle, soft-edge closed form (beta > 1)."""
    alpha = params.alpha / params.q_blocks
    beta, rho, s = params.beta, sol.rho, sol.s
    a, b, z = sol.a, sol.b, sol.z
    k = sol.kappa
    delta = b - a
    d = math.sqrt((z + a) * (z + b))
    xa, xz = a / delta, (z + a) / delta
    half = 0.5 * (beta - 1.0)
    e = (delta * delta / 32.0 - k * r + 0.5 * a - math.log(delta)
         - half * math.log(a * delta)
         + alpha * (1.0 + rho) * (s + math.log1p(-s))
         + 0.5 * k * (math.log1p(a / z)
                      + z * (math.sqrt(z + b) - math.sqrt(z + a)) ** 2 / (4.0 * d))
         + delta * k / (2.0 * d) * (g_kernel(0.0, xz) + half * g_kernel(xa, xz))
         - 0.5 * delta * (1.0 + k / d) * (g_kernel(0.0, xa) + half * g_kernel(xa, xa))
         - rate_function_constant(beta)
         + 0.5 * k * (math.log(delta / z)
                      - delta * k / (2.0 * d) * g_kernel(xz, xz)
                      + (0.5 * delta + k * delta / (2.0 * d)) * g_kernel(xz, xa)))
    return params.q_blocks * e


def exponent_closed_form_square(sol, r, params):
    """E at a converged saddle, hard-edge closed form (beta = 1, a = 0)."""
    alpha = params.alpha / params.q_blocks
    b, z, k = sol.b, sol.z, sol.kappa
    root = math.sqrt(z * (z + b))
    e = (k * (b / 8.0 + math.log(0.5 * (1.0 + math.sqrt(1.0 + b / z))))
         - math.log(b / 4.0)
         + (b - 4.0) * (4.0 * z + 3.0 * b + 12.0) / 32.0
         + 0.5 * k * (0.5 * b * (g_kernel(z / b, 0.0) + 0.5 * math.log(b / z))
                      + k * b / (2.0 * root) * (g_kernel(z / b, 0.0) - g_kernel(z / b, z / b)
                                                - (z / b - root / b) * math.log(b / z)))
         - k * r + alpha * (1.0 + sol.rho) * (sol.s + math.log1p(-sol.s)))
    return params.q_blocks * e


def exponent_at_solution(sol, r, params):
    """Exponent at a converged saddle, from moments of p* in closed form.

    Valid on both branches; on the hard edge the (beta-1) log terms vanish.
    """
    alpha = params.alpha / params.q_blocks
    beta, k = params.beta, sol.kappa
    a, b, z = sol.a, sol.b, sol.z
    delta = b - a
    d = math.sqrt((z + a) * (z + b))
    gap = 0.25 * (math.sqrt(z + b) - math.sqrt(z + a)) ** 2
    mean = delta * delta / 16.0 + k * z / d * gap
    info = pstar_log_moment(sol, z) - math.log(z)
    log_edge = pstar_log_moment(sol, -a)
    if beta == 1.0:
        log_x, log_a = 0.0, 0.0
    else:
        log_x = (beta - 1.0) * pstar_log_moment(sol, 0.0)
        log_a = (beta - 1.0) * math.log(a)
    chem = a - log_a + k * math.log1p(a / z) - 2.0 * log_edge
    e = (0.5 * (mean - log_x) + 0.5 * k * info + 0.5 * chem
         - rate_function_constant(beta) - k * r + alpha * _power_term(sol))
    return params.q_blocks * e


def exponent_at_solution_quadrature(sol, r, params, abs_tol=1e-11):
    """Exponent at a converged saddle with every moment of p* by quadrature.

    The double logarithmic integral is reduced with the stationarity of the
    Coulomb-gas functional: 2 int log|x-y| p*(y) dy equals
    x - (beta-1) log x + k log(1 + x/z) - c on the support, and c follows
    from evaluating that identity at the lower edge.
    """
    alpha = params.alpha / params.q_blocks
    beta, k, a, z = params.beta, sol.kappa, sol.a, sol.z
    hard = beta == 1.0

    def potential(x):
        v = x if hard else x - (beta - 1.0) * math.log(x)
        return v

    mean_pot = pstar_integral(potential, sol, abs_tol)
    info = pstar_integral(lambda x: math.log1p(x / z), sol, abs_tol)
    log_edge = pstar_integral(lambda y: math.log(y - a) if y > a else 0.0, sol, abs_tol)
    edge_pot = a if hard else potential(a)
    chem = edge_pot + k * math.log1p(a / z) - 2.0 * log_edge
    # int int log|x-y| p* p* = (mean_pot + k info - chem) / 2
    double_log = 0.5 * (mean_pot + k * info - chem)
    rate_fn = -double_log + mean_pot - rate_function_constant(beta)
    e = rate_fn + alpha * (sol.rho * info - sol.rho * r + _power_term(sol))
    return params.q_blocks * e


def log_potential(x, sol, abs_tol=1e-11):
    """2 int log|x - y| p*(y) dy, by quadrature split at x."""
    def f(y):
        return math.log(abs(x - y)) if y != x else 0.0

    lo, hi = sol.a, sol.b
    if lo < x < hi:
        left = integrate_sqrt_edges(lambda y: f(y) * pstar_density(y, sol), lo, x, abs_tol)
        right = integrate_sqrt_edges(lambda y: f(y) * pstar_density(y, sol), x, hi, abs_tol)
        return 2.0 * (left + right)
    return 2.0 * pstar_integral(f, sol, abs_tol)


# -- public evaluators --------------------------------------------------------

def _zero_point(r, params, mode):
    sup = mp_support(params)
    return ExponentPoint(r, 0.0, 0.0, 0.0, sup.a0, sup.b0, mode, ZERO)


def _regime(rho, mode):
    if rho == 0.0:
        return ZERO
    if rho == 1.0 and mode != SPHERE:
        return CLAMPED
    return INTERIOR


def gallager_exponent(r, params, mode=PEAK, rho_max=None):
    """Error exponent at normalized rate r (nats per antenna)."""
    check_mode(mode)
    if not r > 0.0:
        raise InvalidParams(f"rate must be positive, got {r}")
    r_erg = rmt.ergodic_rate(params)
    if r >= r_erg:
        return _zero_point(r, params, mode)
    if r_erg - r < NEAR_ERGODIC * r_erg:
        sup = mp_support(params)
        v = v_alpha(params, average_power=mode == AVERAGE)
        rho = (r_erg - r) / (params.alpha * v)
        e = (r - r_erg) ** 2 / (2.0 * v)
        return ExponentPoint(r, e, rho, 0.0, sup.a0, sup.b0, mode, INTERIOR, "quadratic")
    kwargs = {} if rho_max is None else {"rho_max": rho_max}
    rho, sol = rho_of_rate(r, params, mode, return_solution=True, **kwargs)
    if rho == 0.0:
        return _zero_point(r, params, mode)
    e = evaluate(sol, r, params)
    return ExponentPoint(r, max(e, 0.0), rho, sol.s, sol.a, sol.b, mode, _regime(rho, mode))


def evaluate(sol, r, params):
    """Closed-form exponent at a solved saddle: soft edge or hard edge."""
    if sol.branch == "hard-edge":
        if params.beta == 1.0:
            return exponent_closed_form_square(sol, r, params)
        return exponent_at_solution(sol, r, params)
    return exponent_closed_form(sol, r, params)


def exponent_variational(r, params, mode=PEAK):
    """Exponent by quadrature of the Coulomb-gas functional at p*."""
    check_mode(mode)
    if r >= rmt.ergodic_rate(params):
        return 0.0
    rho, sol = rho_of_rate(r, params, mode, return_solution=True)
    if rho == 0.0:
        return 0.0
    return exponent_at_solution_quadrature(sol, r, params)


def v_alpha(params, average_power=False):
    """Dispersion governing E near the ergodic rate.

    v_inf / Q + dv / alpha; with a single block this is v_inf + dv / alpha.
    """
    return (rmt.dispersion_vinf(params) / params.q_blocks
            + rmt.delta_v(params, average_power) / params.alpha)


def quadratic_approx(r, params, regime="finite_alpha"):
    r_erg = rmt.ergodic_rate(params)
    if regime == "outage":
        v = rmt.dispersion_vinf(params)
    elif regime == "finite_alpha":
        v = v_alpha(params)
    elif regime == "q_infinity":
        v = rmt.delta_v(params) / params.alpha
    else:
        raise InvalidParams(f"unknown regime {regime!r}")
    return (r - r_erg) ** 2 / (2.0 * v)


def training_adjusted(params):
    """Charge N channel uses for training: alpha -> alpha - 1."""
    if not params.alpha > 1.0:
        raise InvalidParams(f"training needs alpha > 1, got {params.alpha}")
    return params.with_(alpha=params.alpha - 1.0)


# -- Q -> infinity -----------------------------------------------------------

def _s_infinity(rho, params, tol=1e-14, max_iter=5000):
    sup = mp_support(params)
    s = 0.0
    for _ in range(max_iter):
        z = (1.0 + rho) * (1.0 - s) * params.sigma2
        target = rho / (4.0 * (1.0 + rho)) * (math.sqrt(z + sup.b0) - math.sqrt(z + sup.a0)) ** 2
        if abs(target - s) <= tol:
            return target
        s += 0.5 * (target - s)
    raise NoConvergence("Q->inf s fixed point did not converge", rho=rho)


def _ergodic_at(z, params):
    return rmt.ergodic_rate(params.with_(sigma2=z))


def rbar_infinity(rho, params):
    s = _s_infinity(rho, params)
    z = (1.0 + rho) * (1.0 - s) * params.sigma2
    return math.log1p(-s) + _ergodic_at(z, params)


def exponent_q_infinity(r, params):
    """Exponent in the fast-fading limit Q -> infinity."""
    sup = mp_support(params)
    r_erg = rmt.ergodic_rate(params)
    if r >= r_erg:
        return _zero_point(r, params, PEAK)
    if r <= rbar_infinity(1.0, params):
        rho = 1.0
    else:
        rho = brentq(lambda q: rbar_infinity(q, params) - r, 0.0, 1.0,
                     xtol=1e-14, rtol=4 * 2.23e-16)
    s = _s_infinity(rho, params)
    z = (1.0 + rho) * (1.0 - s) * params.sigma2
    e = params.alpha * (rho * _ergodic_at(z, params) - rho * r
                        + (1.0 + rho) * (s + math.log1p(-s)))
    return ExponentPoint(r, max(e, 0.0), rho, s, sup.a0, sup.b0, PEAK,
                         _regime(rho, PEAK))


# -- sweeps ------------------------------------------------------------------

def _safe_point(r, params, mode):
    try:
        return gallager_exponent(r, params, mode)
    except NoConvergence as exc:
        nan = float("nan")
        return ExponentPoint(r, nan, nan, nan, nan, nan, mode, "failed",
                             f"failed: {exc}")


def _safe_q_infinity(r, params):
    try:
        return exponent_q_infinity(r, params)
    except NoConvergence as exc:
        nan = float("nan")
        return ExponentPoint(r, nan, nan, nan, nan, nan, PEAK, "failed", f"failed: {exc}")


def sweep(r_grid, params, mode=PEAK, workers=1, q_infinity=False):
    """Evaluate E on an increasing rate grid; failed points are kept as rows."""
    grid = [float(r) for r in r_grid]
    if any(r <= 0.0 for r in grid) or any(r1 >= r2 for r1, r2 in zip(grid, grid[1:])):
        raise InvalidParams("rate grid must be positive and strictly increasing")
    if q_infinity:
        rows = [_safe_q_infinity(r, params) for r in grid]
    elif workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_safe_point, grid, [params] * len(grid), [mode] * len(grid)))
    else:
        rows = [_safe_point(r, params, mode) for r in grid]
    return CurveTable(params, mode, rows)
