import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gallager_mimo import exponent as ex
from gallager_mimo import rmt_core as rmt
from gallager_mimo import saddlepoint as sp
from gallager_mimo.errors import InvalidParams
from gallager_mimo.rmt_core import ChannelParams


def test_rate_function_constant_square():
    assert ex.rate_function_constant(1.0) == pytest.approx(1.5)


@pytest.mark.parametrize("beta,alpha,frac", [(3.0, 2.0, 0.7), (1.0, 2.0, 0.8), (1.5, 20.0, 0.9)])
def test_closed_forms_agree(beta, alpha, frac):
    p = ChannelParams(beta, 0.05, alpha)
    r = frac * rmt.ergodic_rate(p)
    rho, sol = sp.rho_of_rate(r, p, return_solution=True)
    e = ex.evaluate(sol, r, p)
    assert ex.exponent_at_solution(sol, r, p) == pytest.approx(e, abs=1e-10)
    assert ex.exponent_at_solution_quadrature(sol, r, p) == pytest.approx(e, abs=1e-8)


def test_square_closed_form_multi_block():
    p = ChannelParams(1.0, 0.05, 6.0, 3)
    r = 0.6 * rmt.ergodic_rate(p)
    _, sol = sp.rho_of_rate(r, p, return_solution=True)
    assert ex.exponent_closed_form_square(sol, r, p) == pytest.approx(
        ex.exponent_at_solution_quadrature(sol, r, p), abs=1e-8)


def test_log_potential_constant_on_support(fig_params):
    r = 0.7 * rmt.ergodic_rate(fig_params)
    _, sol = sp.rho_of_rate(r, fig_params, return_solution=True)
    z, k = sol.z, sol.kappa

    def psi(x):
        return x - 2.0 * math.log(x) + k * math.log1p(x / z) - ex.log_potential(x, sol)

    vals = [psi(x) for x in np.linspace(sol.a, sol.b, 9)[1:-1]]
    assert max(vals) - min(vals) < 1e-7


def test_exponent_is_max_over_rho(fig_params):
    # E(r) = max_rho [E0(rho) - alpha rho r]: the supporting lines lie below the curve
    p = fig_params
    r_erg = rmt.ergodic_rate(p)
    rates = np.linspace(0.3, 0.99, 8) * r_erg
    pts = [ex.gallager_exponent(r, p) for r in rates]
    for pt in pts:
        e0 = pt.e + p.alpha * pt.rho * pt.r
        for other in rates:
            assert e0 - p.alpha * pt.rho * other <= ex.gallager_exponent(other, p).e + 1e-8


def test_zero_above_ergodic(fig_params):
    r_erg = rmt.ergodic_rate(fig_params)
    assert ex.gallager_exponent(r_erg, fig_params).e == 0.0
    assert ex.gallager_exponent(1.5 * r_erg, fig_params).regime == ex.ZERO


def test_quadratic_fallback_continuous(fig_params):
    r_erg = rmt.ergodic_rate(fig_params)
    r = r_erg * (1 - 2e-6)
    e = ex.gallager_exponent(r, fig_params).e
    assert e == pytest.approx(ex.quadratic_approx(r, fig_params), rel=1e-3)


def test_near_ergodic_quadratic(fig_params):
    r_erg = rmt.ergodic_rate(fig_params)
    for d in (1e-3, 3e-3):
        r = r_erg * (1 - d)
        assert ex.gallager_exponent(r, fig_params).e == pytest.approx(
            ex.quadratic_approx(r, fig_params), rel=0.02)


def test_nonnegative_all_modes(fig_params):
    grid = np.linspace(0.1, 1.05, 12) * rmt.ergodic_rate(fig_params)
    for mode in sp.MODES:
        assert min(ex.sweep(grid, fig_params, mode).e) >= 0.0


def test_large_alpha_limit():
    p = ChannelParams(3.0, 0.05, 20.0)
    r_erg = rmt.ergodic_rate(p)
    es = [ex.gallager_exponent(0.9 * r_erg, p.with_(alpha=a)).e for a in (20.0, 100.0, 1000.0)]
    assert es[0] < es[1] < es[2]
    big = p.with_(alpha=1000.0)
    h = 1e-3 * r_erg
    c1 = 2 * ex.gallager_exponent(r_erg - h, big).e / h ** 2
    c2 = 2 * ex.gallager_exponent(r_erg - 2 * h, big).e / (2 * h) ** 2
    assert (2 * c1 - c2) * rmt.dispersion_vinf(p) == pytest.approx(1.0, rel=0.02)


def test_q_infinity_matches_large_q():
    p = ChannelParams(3.0, 0.05, 20.0)
    r = 0.8 * rmt.ergodic_rate(p)
    e_inf = ex.exponent_q_infinity(r, p).e
    e_big = ex.gallager_exponent(r, p.with_(q_blocks=1024)).e
    assert e_big <= e_inf
    assert e_big == pytest.approx(e_inf, rel=0.02)


def test_q_infinity_zero_rate_limit():
    p = ChannelParams(3.0, 0.05, 20.0)
    pt = ex.exponent_q_infinity(ex.rbar_infinity(1.0, p) * 0.5, p)
    assert pt.rho == 1.0 and pt.regime == ex.CLAMPED


def test_training_adjusted(fig_params):
    assert ex.training_adjusted(fig_params).alpha == 1.0
    with pytest.raises(InvalidParams):
        ex.training_adjusted(fig_params.with_(alpha=1.0))


def test_curve_table_rejects_unsorted(fig_params):
    pts = [ex.gallager_exponent(r, fig_params) for r in (2.0, 1.0)]
    with pytest.raises(InvalidParams):
        ex.CurveTable(fig_params, sp.PEAK, pts)


@given(st.floats(0.3, 0.97))
def test_exponent_nonnegative_and_bounded_by_linear(frac):
    p = ChannelParams(3.0, 0.05, 2.0)
    r_erg = rmt.ergodic_rate(p)
    e = ex.gallager_exponent(frac * r_erg, p).e
    assert 0.0 < e <= p.alpha * (r_erg - frac * r_erg) + 1e-12


def test_sweep_parallel_matches_serial(fig_params):
    grid = np.linspace(0.5, 3.9, 6)
    a = ex.sweep(grid, fig_params)
    b = ex.sweep(grid, fig_params, workers=2)
    assert a.e == b.e
