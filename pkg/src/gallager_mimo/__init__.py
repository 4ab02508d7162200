"""Large-N Gallager error exponent for MIMO Rayleigh block-fading channels."""
from .errors import BracketFailure, InvalidParams, NoConvergence, QuadratureError
from .exponent import (CurveTable, ExponentPoint, exponent_q_infinity, exponent_variational,
                       gallager_exponent, quadratic_approx, sweep, v_alpha)
from .finite_n_mc import McConfig, McEstimate, conditional_exponent, estimate_en
from .rmt_core import (ChannelParams, delta_v, dispersion_vinf, ergodic_rate, g_kernel,
                       mp_support, theta_bounds)
from .saddlepoint import (AVERAGE, PEAK, SPHERE, SaddleSolution, r1, rbar, rho_of_rate,
                          solve_saddle)

__version__ = "0.1.0"
