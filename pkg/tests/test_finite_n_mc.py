import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gallager_mimo import finite_n_mc as mc
from gallager_mimo import rmt_core as rmt
from gallager_mimo.errors import InvalidParams
from gallager_mimo.rmt_core import ChannelParams


def brute_force(lam, r, params, grid=801):
    rhos = np.linspace(0.0, 1.0, grid)[:, None]
    ss = np.linspace(0.0, 0.999, grid)[None, :]
    return max(0.0, float(mc.objective(lam[None, None], rhos, ss, r, params).max()))


def test_config_validation(fig_params):
    with pytest.raises(InvalidParams):
        mc.McConfig(3, fig_params.with_(beta=1.5), 1.0, 10)
    with pytest.raises(InvalidParams):
        mc.McConfig(2, fig_params, 1.0, 0)
    assert mc.McConfig(2, fig_params, 1.0, 10).k == 6


def test_eigenvalue_shapes_and_scale():
    rng = np.random.default_rng(0)
    lam = mc.sample_block_eigenvalues(50, 150, 2, rng)
    assert lam.shape == (2, 50)
    assert lam.mean() == pytest.approx(3.0, rel=0.05)


def test_sampling_reproducible(fig_params):
    cfg = mc.McConfig(2, fig_params, 2.0, 5, seed=7)
    a, _ = mc.draw_samples(cfg, [0, 3])
    b, _ = mc.draw_samples(cfg, [3])
    assert np.array_equal(a[1], b[0])


@given(st.floats(0.01, 1.0), st.floats(0.0, 0.9))
def test_best_s_is_stationary(rho, s0):
    p = ChannelParams(3.0, 0.05, 2.0)
    lam = mc.sample_block_eigenvalues(3, 9, 1, np.random.default_rng(4))[None]
    s = mc.best_s(lam, np.array([rho]), p.sigma2, np.array([s0 * rho / (1 + rho)]))
    v = mc.objective(lam, rho, s, 1.0, p)[0]
    for ds in (1e-4, -1e-4):
        t = np.clip(s + ds, 0.0, 0.999)
        assert mc.objective(lam, rho, t, 1.0, p)[0] <= v + 1e-12


def test_conditional_exponent_vs_grid(fig_params):
    rng = np.random.default_rng(11)
    for _ in range(3):
        lam = mc.sample_block_eigenvalues(2, 6, 1, rng)
        for r in (0.5, 2.0, 3.5):
            v, rho, s = mc.conditional_exponent(lam, r, fig_params)
            assert v >= brute_force(lam, r, fig_params) - 1e-12
            assert v == pytest.approx(brute_force(lam, r, fig_params), abs=5e-3)


def test_batch_matches_single(fig_params):
    cfg = mc.McConfig(3, fig_params, 2.5, 4, seed=1)
    lam, _ = mc.draw_samples(cfg, range(4))
    batch, _, _ = mc.conditional_exponent(lam, 2.5, fig_params)
    single = [mc.conditional_exponent(x, 2.5, fig_params)[0] for x in lam]
    assert np.allclose(batch, single, rtol=0, atol=1e-14)


@given(st.lists(st.floats(0.0, 5.0), min_size=1, max_size=30), st.integers(1, 6))
def test_aggregate_bounds(values, n):
    e, _, ess = mc.aggregate(values, n)
    assert min(values) - 1e-12 <= e <= np.mean(values) + 1e-12
    assert 1.0 - 1e-9 <= ess <= len(values) + 1e-9


def test_single_sample_identity(fig_params):
    cfg = mc.McConfig(2, fig_params, 2.0, 1, seed=3)
    est = mc.estimate_en(cfg, keep_samples=True)
    assert est.e_n == est.samples[0]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_thread_count_does_not_change_result(fig_params):
    a = mc.estimate_en(mc.McConfig(2, fig_params, 2.0, 200, seed=5, workers=1))
    b = mc.estimate_en(mc.McConfig(2, fig_params, 2.0, 200, seed=5, workers=3))
    assert a.e_n == b.e_n and a.stderr == b.stderr


def test_convergence_near_ergodic_rate():
    # with plentiful effective samples the gap to the large-N limit closes in n
    from gallager_mimo.exponent import gallager_exponent
    p = ChannelParams(3.0, 0.05, 2.0)
    r = 0.9 * rmt.ergodic_rate(p)
    target = gallager_exponent(r, p).e
    gaps = []
    for n in (2, 4, 6):
        est = mc.estimate_en(mc.McConfig(n, p, r, 10000, seed=0))
        gaps.append(abs(est.e_n - target) / target)
    assert gaps[0] > gaps[1] > gaps[2]


def test_trace_identity():
    rng = np.random.default_rng(8)
    traces = np.array([mc.sample_block_eigenvalues(3, 9, 1, rng).sum() for _ in range(4000)])
    assert abs(traces.mean() - 9.0) < 3 * traces.std(ddof=1) / math.sqrt(len(traces))


def test_maximizer_beats_probes(fig_params):
    rng = np.random.default_rng(21)
    lam = mc.sample_block_eigenvalues(3, 9, 2, rng)[None]
    for r in (1.0, 2.5, 3.5):
        v, rho, s = mc.conditional_exponent(lam[0], r, fig_params)
        assert v >= float(mc.objective(lam, rho, 0.0, r, fig_params)[0]) - 1e-12
        for pr, ps in rng.uniform(0, 1, (20, 2)):
            assert v >= float(mc.objective(lam, pr, 0.9 * ps, r, fig_params)[0]) - 1e-12
        assert (v == 0.0) == (rho == 0.0) or v < 1e-14


def test_more_blocks_do_not_hurt():
    p1 = ChannelParams(3.0, 0.05, 2.0, 1)
    p4 = p1.with_(q_blocks=4)
    r = 0.6 * rmt.ergodic_rate(p1)
    med, var = [], 0.0
    for p in (p1, p4):
        lam, _ = mc.draw_samples(mc.McConfig(3, p, r, 1000, seed=2), range(1000))
        v = mc.conditional_exponent(lam, r, p)[0]
        med.append(np.median(v))
        # standard error of a sample median, normal approximation
        var += (1.2533 * v.std(ddof=1)) ** 2 / len(v)
    assert med[1] >= med[0] - 3.0 * math.sqrt(var)
