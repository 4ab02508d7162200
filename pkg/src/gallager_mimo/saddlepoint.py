"""Saddle-point system for the large-N Gallager exponent.

For a Gallager parameter rho the optimal eigenvalue density p* lives on an
interval [a, b]. The edges and the power-constraint parameter s solve

    edge:   (beta-1)/sqrt(ab) - k/D = 1
    norm:   a + b + 2k - 2(beta+1) = 2kz/D
    s:      s = rho/(1+rho) int x p*(x)/(x+z) dx
              = rho/(4(1+rho)) (sqrt(z+b) - sqrt(z+a))^2 (1 + kz/D^2)

with z = (1+rho)(1-s) sigma2, D = sqrt((z+a)(z+b)) and k = alpha rho / Q.
The (1 + kz/D^2) factor comes from the tilt of p*; without it the s-update
is not stationary and dE/dr = -alpha rho fails away from the ergodic rate.
Everything below works with the effective load k, so the number of fading
blocks only enters through it.
"""
import math
from dataclasses import dataclass, field

from scipy.optimize import brentq

from .errors import BracketFailure, InvalidParams, NoConvergence
from .quadrature import integrate_sqrt_edges
from .rmt_core import ergodic_rate, g_kernel, mp_support

PEAK = "peak-power"
AVERAGE = "average-power"
SPHERE = "sphere-packing"
MODES = (PEAK, AVERAGE, SPHERE)

RESIDUAL_TOL = 1e-10
HARD_EDGE_SWITCH = 1e-12
RHO_MAX = 1e3

_XTOL = 1e-15
_RTOL = 4 * 2.23e-16


def check_mode(mode):
    if mode not in MODES:
        raise InvalidParams(f"unknown mode {mode!r}; expected one of {MODES}")
    return mode


def z_of(rho, s, params):
    return (1.0 + rho) * (1.0 - s) * params.sigma2


def load(rho, params):
    """Effective coding load alpha * rho / Q seen by each fading block."""
    return params.alpha * rho / params.q_blocks


@dataclass(frozen=True)
class SaddleSolution:
    rho: float
    s: float
    a: float
    b: float
    z: float
    residuals: tuple
    mode: str = PEAK
    kappa: float = 0.0
    branch: str = "soft-edge"
    iterations: int = 0
    notes: tuple = field(default=())

    @property
    def width(self):
        return self.b - self.a

    @property
    def root_d(self):
        return math.sqrt((self.z + self.a) * (self.z + self.b))

    @property
    def converged(self):
        return max(self.residuals) <= RESIDUAL_TOL


# -- endpoint equations ------------------------------------------------------

def edge_residual(a, b, kappa, z, beta):
    return (beta - 1.0) / math.sqrt(a * b) - kappa / math.sqrt((z + a) * (z + b)) - 1.0


def norm_residual(a, b, kappa, z, beta):
    d = math.sqrt((z + a) * (z + b))
    return a + b + 2.0 * kappa - 2.0 * (beta + 1.0) - 2.0 * kappa * z / d


def tilted_load(a, b, kappa, z):
    """int x p*(x) / (x + z) dx for the density with edges a, b."""
    d2 = (z + a) * (z + b)
    return 0.25 * (math.sqrt(z + b) - math.sqrt(z + a)) ** 2 * (1.0 + kappa * z / d2)


def s_target(rho, z, a, b, kappa):
    """Right-hand side of the s-equation."""
    return rho / (1.0 + rho) * tilted_load(a, b, kappa, z)


def lower_edge(b, kappa, z, beta):
    """Solve the edge equation for a in (0, b); None if no root exists.

    Writes a = b t^2, which turns the equation into the regular scalar root
    (beta-1)/b = t (1 + k/D(t)) on t in [0, 1].
    """
    c = (beta - 1.0) / b
    zb = z + b

    def f(t):
        return c - t * (1.0 + kappa / math.sqrt((z + b * t * t) * zb))

    if f(1.0) >= 0.0:
        return None
    t = brentq(f, 0.0, 1.0, xtol=_XTOL, rtol=_RTOL, maxiter=200)
    return b * t * t


def _norm_of_b(b, kappa, z, beta, hard_edge):
    """Norm-equation residual with a = a(b); equals 4 (mass - 1)."""
    if hard_edge:
        a = 0.0
    else:
        a = lower_edge(b, kappa, z, beta)
        if a is None:
            return -4.0
    return norm_residual(a, b, kappa, z, beta)


def normalization_mass(b, rho, s, params):
    """Mass n(b) of the density whose lower edge solves the edge equation.

    With a = a(b) the norm-equation residual is exactly 4 (n(b) - 1).
    """
    kappa, z = load(rho, params), z_of(rho, s, params)
    return 1.0 + 0.25 * _norm_of_b(b, kappa, z, params.beta, params.square_beta)


def endpoint_bracket(rho, params):
    sup = mp_support(params)
    return sup.a0 / 4.0, 4.0 * sup.b0 + 4.0 * load(rho, params)


def _endpoints(kappa, z, params, notes=None):
    beta = params.beta
    hard_edge = params.square_beta
    sup = mp_support(params)
    lo, hi = sup.a0 / 4.0, 4.0 * sup.b0 + 4.0 * kappa
    for _ in range(200):
        if _norm_of_b(lo, kappa, z, beta, hard_edge) < 0.0:
            break
        lo *= 0.5
    else:
        raise BracketFailure("no lower bracket for b", lo=lo)
    for _ in range(200):
        if _norm_of_b(hi, kappa, z, beta, hard_edge) > 0.0:
            break
        hi *= 2.0
    else:
        raise BracketFailure("no upper bracket for b", hi=hi)
    b = brentq(_norm_of_b, lo, hi, args=(kappa, z, beta, hard_edge),
               xtol=_XTOL, rtol=_RTOL, maxiter=300)
    if hard_edge:
        return 0.0, b, "hard-edge"
    a = lower_edge(b, kappa, z, beta)
    if a is None:
        raise NoConvergence("edge equation lost its root at the solved b", b=b)
    if a < HARD_EDGE_SWITCH:
        # a has collapsed onto the origin: drop the edge equation.
        b = brentq(_norm_of_b, lo, hi, args=(kappa, z, beta, True),
                   xtol=_XTOL, rtol=_RTOL, maxiter=300)
        if notes is not None:
            notes.append(f"switched to hard-edge branch (a={a:.3g})")
        return 0.0, b, "hard-edge"
    return a, b, "soft-edge"


def solve_endpoints(rho, s, params):
    """Edges (a, b) of p* for fixed rho and s."""
    if rho < 0.0 or not 0.0 <= s < 1.0:
        raise InvalidParams(f"need rho >= 0 and 0 <= s < 1, got rho={rho}, s={s}")
    a, b, _ = _endpoints(load(rho, params), z_of(rho, s, params), params)
    return a, b


def _residuals(a, b, kappa, z, beta, branch):
    edge = 0.0 if branch == "hard-edge" else abs(edge_residual(a, b, kappa, z, beta))
    return edge, abs(norm_residual(a, b, kappa, z, beta))


def solve_saddle(rho, params, mode=PEAK, s_init=0.0, damping=0.5,
                 tol=1e-13, max_iter=2000):
    """Jointly solve for (a, b, s) at fixed rho.

    The edges are re-solved at each z; s follows the damped update
    s <- (1 - damping) s + damping s_target(s). Average-power mode pins s = 0.
    """
    check_mode(mode)
    if rho < 0.0:
        raise InvalidParams(f"rho must be >= 0, got {rho}")
    kappa = load(rho, params)
    notes = []
    if mode == AVERAGE or rho == 0.0:
        z = z_of(rho, 0.0, params)
        a, b, branch = _endpoints(kappa, z, params, notes)
        res = _residuals(a, b, kappa, z, params.beta, branch) + (0.0,)
        sol = SaddleSolution(rho, 0.0, a, b, z, res, AVERAGE if mode == AVERAGE else PEAK,
                             kappa, branch, 0, tuple(notes))
        return _checked(sol)

    s = min(max(s_init, 0.0), rho / (1.0 + rho))
    trace = []
    for it in range(1, max_iter + 1):
        z = z_of(rho, s, params)
        a, b, branch = _endpoints(kappa, z, params, notes)
        target = s_target(rho, z, a, b, kappa)
        step = target - s
        trace.append(abs(step))
        if abs(step) <= tol:
            s = target
            break
        s += damping * step
    else:
        raise NoConvergence("s fixed point did not converge", iterations=max_iter,
                            last_steps=trace[-5:])
    z = z_of(rho, s, params)
    a, b, branch = _endpoints(kappa, z, params, notes)
    res = _residuals(a, b, kappa, z, params.beta, branch) + (abs(s - s_target(rho, z, a, b, kappa)),)
    sol = SaddleSolution(rho, s, a, b, z, res, PEAK, kappa, branch, it, tuple(notes))
    return _checked(sol)


def _checked(sol):
    if not sol.converged:
        raise NoConvergence("saddle residuals above tolerance", residuals=sol.residuals,
                            iterations=sol.iterations)
    return sol


# -- the optimal density -----------------------------------------------------

def pstar_density(x, solution, params=None):
    """Optimal eigenvalue density p*(x); zero outside [a, b]."""
    a, b, z = solution.a, solution.b, solution.z
    if x <= a or x >= b or x <= 0.0:
        return 0.0
    tilt = solution.kappa * z / solution.root_d
    return (math.sqrt((x - a) * (b - x)) * (x + z + tilt)
            / (2.0 * math.pi * x * (x + z)))


def pstar_integral(f, solution, abs_tol=1e-11):
    """Integral of f(x) p*(x) over the support of p*."""
    return integrate_sqrt_edges(lambda x: f(x) * pstar_density(x, solution),
                                solution.a, solution.b, abs_tol=abs_tol)


def pstar_log_moment(solution, shift):
    """Closed form of int log(x + shift) p*(x) dx for shift >= -a."""
    a, z, delta = solution.a, solution.z, solution.width
    tilt = solution.kappa / solution.root_d
    x = (shift + a) / delta
    return (math.log(delta)
            + 0.5 * delta * (1.0 + tilt) * g_kernel(x, a / delta)
            - 0.5 * delta * tilt * g_kernel(x, (z + a) / delta))


def compressed_load(solution):
    """int x p*(x) / (x + z) dx, in closed form."""
    return tilted_load(solution.a, solution.b, solution.kappa, solution.z)


# -- the rate map ------------------------------------------------------------

def rbar_from_solution(solution):
    """Rate at which rho is the optimal Gallager parameter."""
    info = pstar_log_moment(solution, solution.z) - math.log(solution.z)
    if solution.mode == AVERAGE:
        rho = solution.rho
        return info - rho / (1.0 + rho) * compressed_load(solution)
    return math.log1p(-solution.s) + info


def rbar_quadrature(solution):
    z = solution.z
    info = pstar_integral(lambda x: math.log1p(x / z), solution)
    if solution.mode == AVERAGE:
        rho = solution.rho
        return info - rho / (1.0 + rho) * pstar_integral(lambda x: x / (x + z), solution)
    return math.log1p(-solution.s) + info


def _saddle_mode(mode):
    return AVERAGE if mode == AVERAGE else PEAK


def rbar(rho, params, mode=PEAK):
    return rbar_from_solution(solve_saddle(rho, params, _saddle_mode(check_mode(mode))))


def r1(params, mode=PEAK):
    return rbar(1.0, params, mode)


class _RateMap:
    """r̄ evaluations with warm starts and a monotonicity audit."""

    def __init__(self, params, mode):
        self.params = params
        self.mode = _saddle_mode(mode)
        self.seen = {}

    def solution(self, rho):
        s0 = 0.0
        if self.seen:
            near = min(self.seen, key=lambda q: abs(q - rho))
            s0 = self.seen[near][0].s
        sol = solve_saddle(rho, self.params, self.mode, s_init=s0)
        self.seen[rho] = (sol, rbar_from_solution(sol))
        return sol

    def __call__(self, rho):
        if rho not in self.seen:
            self.solution(rho)
        return self.seen[rho][1]

    def audit(self):
        pts = sorted(self.seen.items())
        for (r0, (_, v0)), (r1_, (_, v1)) in zip(pts, pts[1:]):
            if v1 >= v0 and r1_ - r0 > 1e-9:
                raise NoConvergence("rbar is not decreasing in rho",
                                    rho=(r0, r1_), rbar=(v0, v1))


def rho_of_rate(r, params, mode=PEAK, sphere_packing=None, rho_max=RHO_MAX,
                return_solution=False):
    """Optimal Gallager parameter at rate r.

    rho = 0 at or above the ergodic rate, the root of r̄(rho) = r in between,
    and for r below r1 either the clamp rho = 1 or (sphere packing) the root
    on an expanding bracket up to ``rho_max``.
    """
    check_mode(mode)
    if sphere_packing is None:
        sphere_packing = mode == SPHERE
    rmap = _RateMap(params, mode)

    def done(rho):
        if return_solution:
            return rho, rmap.seen[rho][0] if rho in rmap.seen else rmap.solution(rho)
        return rho

    if r >= ergodic_rate(params):
        rmap(0.0)
        return done(0.0)
    if r >= rmap(1.0):
        lo, hi = 0.0, 1.0
        rmap(0.0)
    elif not sphere_packing:
        return done(1.0)
    else:
        lo, hi = 1.0, 2.0
        while rmap(hi) > r:
            lo, hi = hi, 2.0 * hi
            if lo >= rho_max:
                raise BracketFailure(f"sphere-packing root beyond rho_max={rho_max}",
                                     rho=lo, rbar=rmap(lo), r=r)
            hi = min(hi, rho_max)
    rho = brentq(lambda q: rmap(q) - r, lo, hi, xtol=1e-13, rtol=_RTOL, maxiter=200)
    rmap(rho)
    rmap.audit()
    return done(rho)
