"""Closed-form random-matrix quantities for the Rayleigh MIMO channel.

All rates are in nats. ``sigma2`` is the noise power (SNR = 1/sigma2).
"""
import math
from dataclasses import dataclass, replace

from .errors import InvalidParams
from .quadrature import integrate_sqrt_edges


@dataclass(frozen=True)
class ChannelParams:
    """Problem instance: antenna ratio, noise power, blocklength ratio, blocks."""

    beta: float
    sigma2: float
    alpha: float = 1.0
    q_blocks: int = 1

    def __post_init__(self):
        if not self.beta >= 1.0:
            raise InvalidParams(f"beta must be >= 1, got {self.beta}")
        if not self.sigma2 > 0.0:
            raise InvalidParams(f"sigma2 must be > 0, got {self.sigma2}")
        if not self.alpha > 0.0:
            raise InvalidParams(f"alpha must be > 0, got {self.alpha}")
        if int(self.q_blocks) != self.q_blocks or self.q_blocks < 1:
            raise InvalidParams(f"q_blocks must be an integer >= 1, got {self.q_blocks}")
        object.__setattr__(self, "q_blocks", int(self.q_blocks))

    @property
    def square_beta(self):
        """True on the beta = 1 branch (hard edge of the spectrum at zero)."""
        return self.beta == 1.0

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class MpSupport:
    a0: float
    b0: float


def mp_support(params):
    sb = math.sqrt(params.beta)
    return MpSupport((sb - 1.0) ** 2, (sb + 1.0) ** 2)


def mp_density(x, params):
    sup = mp_support(params)
    if x <= sup.a0 or x >= sup.b0 or x <= 0.0:
        return 0.0
    return math.sqrt((sup.b0 - x) * (x - sup.a0)) / (2.0 * math.pi * x)


def mp_integral(f, params, abs_tol=1e-11):
    """Integral of ``f(x) * mp_density(x)`` over the Marchenko-Pastur support."""
    sup = mp_support(params)
    return integrate_sqrt_edges(lambda x: f(x) * mp_density(x, params),
                                sup.a0, sup.b0, abs_tol=abs_tol)


def ergodic_u(params):
    s2, beta = params.sigma2, params.beta
    c = s2 + beta - 1.0
    return (c + math.sqrt(c * c + 4.0 * s2)) / (2.0 * s2)


def ergodic_rate(params):
    """Large-N per-antenna ergodic mutual information, in nats."""
    u = ergodic_u(params)
    return (math.log(u) + params.beta * math.log1p(1.0 / (u * params.sigma2))
            - (1.0 - 1.0 / u))


def ergodic_rate_quadrature(params):
    s2 = params.sigma2
    return mp_integral(lambda x: math.log1p(x / s2), params)


def g_kernel(x, y):
    """Closed form of (1/pi) * int_0^1 sqrt(t(1-t)) log(t+x)/(t+y) dt."""
    if x < 0.0 or y < 0.0:
        raise ValueError(f"g_kernel needs x, y >= 0, got ({x}, {y})")
    sx, sx1 = math.sqrt(x), math.sqrt(1.0 + x)
    out = (1.0 + 2.0 * y) * math.log(0.5 * (sx1 + sx)) - 0.5 * (sx1 - sx) ** 2
    if y > 0.0:
        sy, sy1 = math.sqrt(y), math.sqrt(1.0 + y)
        out -= 2.0 * sy * sy1 * math.log((sx * sy1 + sy * sx1) / (sy1 + sy))
    return out


def g_kernel_quadrature(x, y, abs_tol=1e-11):
    if x < 0.0 or y < 0.0:
        raise ValueError(f"g_kernel needs x, y >= 0, got ({x}, {y})")

    def f(t):
        return math.sqrt(t * (1.0 - t)) * math.log(t + x) / (t + y) if t > 0.0 else 0.0

    # narrow features at t ~ y (pole just left of 0) and t ~ x (log):
    # one breakpoint per decade between the smallest scale and 1
    small = min([v for v in (x, y) if v > 0.0], default=1.0)
    decades = int(math.ceil(-math.log10(small))) if small < 1.0 else 0
    scales = [10.0 ** -k for k in range(1, decades + 2)]
    return integrate_sqrt_edges(f, 0.0, 1.0, abs_tol=abs_tol, points=scales) / math.pi


def dispersion_vinf(params):
    u = ergodic_u(params)
    return -math.log1p(-((1.0 - u) ** 2) / (params.beta * u * u))


def g0(params):
    sup = mp_support(params)
    s2 = params.sigma2
    return 0.25 * (math.sqrt(s2 + sup.b0) - math.sqrt(s2 + sup.a0)) ** 2


def g0_quadrature(params):
    s2 = params.sigma2
    return mp_integral(lambda x: x / (x + s2), params)


def delta_v(params, average_power=False):
    """Finite-blocklength dispersion correction.

    ``average_power=True`` drops the -g0^2 term contributed by the
    peak-power constraint.
    """
    g = g0(params)
    return 2.0 * g if average_power else 2.0 * g - g * g


def theta_bounds(params):
    """Lower and upper dispersion bounds (theta_minus, theta_plus)."""
    sup = mp_support(params)
    s2, beta = params.sigma2, params.beta
    vinf = dispersion_vinf(params)
    theta_minus = params.alpha * vinf + 0.5 * (
        beta + 1.0 - (s2 * (beta + 1.0) + (beta - 1.0) ** 2)
        / math.sqrt((s2 + sup.a0) * (s2 + sup.b0)))
    theta_plus = params.alpha * vinf + delta_v(params)
    return theta_minus, theta_plus
