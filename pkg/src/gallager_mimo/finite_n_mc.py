"""Finite-N Monte Carlo estimate of the Gallager exponent.

Each sample draws Q independent K x N channels, maximizes the conditional
exponent E(r | H) over (rho, s), and the samples are combined as

    E_N(r) = -(1/N^2) log mean exp(-N^2 E(r | H)).

The average is dominated by rare, badly conditioned channels once N^2 E is
large, so the effective sample size of the exp-weights is reported with the
estimate.
"""
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams, NoConvergence
from .rmt_core import ChannelParams

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
ESS_WARN = 100.0


@dataclass(frozen=True)
class McConfig:
    n: int
    params: ChannelParams
    r: float
    num_samples: int
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParams(f"n must be >= 1, got {self.n}")
        k = self.params.beta * self.n
        if abs(k - round(k)) > 1e-9:
            raise InvalidParams(f"beta * n = {k} is not an integer")
        if self.num_samples < 1:
            raise InvalidParams("num_samples must be >= 1")
        if not self.r > 0.0:
            raise InvalidParams(f"rate must be positive, got {self.r}")

    @property
    def k(self):
        return int(round(self.params.beta * self.n))


@dataclass
class McEstimate:
    e_n: float
    stderr: float
    num_samples: int
    sample_mean_logs: dict
    ess: float
    rejected: int = 0
    samples: np.ndarray = field(default=None, repr=False)


def sample_rng(seed, index, attempt=0):
    """Independent generator for one sample, keyed by (seed, index)."""
    key = (index,) if attempt == 0 else (index, attempt)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def sample_block_eigenvalues(n, k, q_blocks, rng):
    """Eigenvalues of H^H H for Q channels with i.i.d. CN(0, 1/n) entries.

    Returns an array of shape (q_blocks, n); these are the n nonzero
    eigenvalues of H H^H.
    """
    if k < n or n < 1:
        raise InvalidParams(f"need k >= n >= 1, got n={n}, k={k}")
    g = rng.standard_normal((q_blocks, k, n, 2)) * math.sqrt(0.5 / n)
    h = g[..., 0] + 1j * g[..., 1]
    gram = np.conj(np.swapaxes(h, -1, -2)) @ h
    return np.clip(np.linalg.eigvalsh(gram), 0.0, None)


def draw_samples(config, indices):
    """Eigenvalues for the given sample indices, shape (len, Q, n).

    A sample whose eigensolve fails is redrawn from a fresh substream.
    """
    p = config.params
    out = np.empty((len(indices), p.q_blocks, config.n))
    rejected = 0
    for j, m in enumerate(indices):
        for attempt in range(5):
            try:
                out[j] = sample_block_eigenvalues(config.n, config.k, p.q_blocks,
                                                  sample_rng(config.seed, m, attempt))
                break
            except np.linalg.LinAlgError:
                rejected += 1
        else:
            raise NoConvergence("eigensolver failed on every redraw", sample=m)
    return out, rejected


# -- conditional exponent ----------------------------------------------------

def objective(lam, rho, s, r, params):
    """(alpha/Q) sum_q [(rho/N) log det(1 + H H^H / z) - rho r + (1+rho)(s + log(1-s))].

    ``lam`` has shape (..., Q, N); rho and s broadcast against its leading axes.
    """
    rho = np.asarray(rho, dtype=float)
    s = np.asarray(s, dtype=float)
    z = (1.0 + rho) * (1.0 - s) * params.sigma2
    q, n = lam.shape[-2:]
    info = np.log1p(lam / z[..., None, None]).sum(axis=(-2, -1)) / (n * q)
    return params.alpha * (rho * info - rho * r + (1.0 + rho) * (s + np.log1p(-s)))


def _s_slope(lam, rho, s, sigma2):
    """Sign-carrying s-derivative of the objective, up to a positive factor."""
    z = (1.0 + rho) * (1.0 - s) * sigma2
    load = (lam / (z[..., None, None] + lam)).mean(axis=(-2, -1))
    return rho * load - (1.0 + rho) * s


def best_s(lam, rho, sigma2, s0=None, damping=1.0, tol=1e-14, max_iter=500):
    """Maximizing s for each sample at fixed rho.

    The objective is concave in s with stationary point
    s = rho/(1+rho) mean(lam / (z + lam)). Damped fixed point first; any
    sample still moving falls back to bisection on the s-derivative.
    """
    rho = np.broadcast_to(np.asarray(rho, dtype=float), lam.shape[:-2])
    s = np.zeros(lam.shape[:-2]) if s0 is None else np.array(s0, dtype=float)
    done = rho == 0.0
    s = np.where(done, 0.0, s)
    for _ in range(max_iter):
        if done.all():
            break
        z = (1.0 + rho) * (1.0 - s) * sigma2
        target = rho / (1.0 + rho) * (lam / (z[..., None, None] + lam)).mean(axis=(-2, -1))
        step = target - s
        newly = np.abs(step) <= tol
        s = np.where(done, s, np.where(newly, target, s + damping * step))
        done = done | newly
    if not done.all():
        idx = np.nonzero(~done)
        lo = np.zeros(len(idx[0]))
        hi = rho[idx] / (1.0 + rho[idx])
        sub, sub_rho = lam[idx], rho[idx]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            up = _s_slope(sub, sub_rho, mid, sigma2) > 0.0
            lo, hi = np.where(up, mid, lo), np.where(up, hi, mid)
        s = s.copy()
        s[idx] = 0.5 * (lo + hi)
        if np.any(hi - lo > 1e-12):
            raise NoConvergence("s maximization failed", samples=idx)
    return s


def _profile(lam, rho, r, params, s0=None):
    s = best_s(lam, rho, params.sigma2, s0)
    return objective(lam, rho, s, r, params), s


def conditional_exponent(eigenvalues, r, params, tol=1e-11):
    """Maximized conditional exponent E(r | H) and its maximizer.

    ``eigenvalues`` is (Q, N) for one channel or (M, Q, N) for a batch.
    Golden-section search on rho in [0, 1] (the profile over s is
    quasi-concave), with the rho = 0 boundary value 0 as a floor.
    Returns (value, rho*, s*) with the same leading shape as the input.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    single = lam.ndim == 2
    if single:
        lam = lam[None]
    shape = lam.shape[:-2]
    lo, hi = np.zeros(shape), np.ones(shape)
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, sc = _profile(lam, c, r, params)
    fd, sd = _profile(lam, d, r, params)
    iters = int(math.ceil(math.log(tol) / math.log(GOLDEN)))
    for _ in range(iters):
        left = fc >= fd
        # keep [lo, d] where fc >= fd, else [c, hi]
        lo, hi = np.where(left, lo, c), np.where(left, d, hi)
        c_new = np.where(left, hi - GOLDEN * (hi - lo), d)
        d_new = np.where(left, c, lo + GOLDEN * (hi - lo))
        probe = np.where(left, c_new, d_new)
        fp, sp = _profile(lam, probe, r, params, np.where(left, sc, sd))
        fc, sc, fd, sd = (np.where(left, fp, fd), np.where(left, sp, sd),
                          np.where(left, fc, fp), np.where(left, sc, sp))
        c, d = c_new, d_new
    cands = [(np.zeros(shape), np.zeros(shape)), (np.ones(shape), None),
             (c, sc), (d, sd), (0.5 * (lo + hi), None)]
    best_v = np.full(shape, -np.inf)
    best_rho, best_s_ = np.zeros(shape), np.zeros(shape)
    for rho_c, s_c in cands:
        v, s_c = _profile(lam, rho_c, r, params, s_c)
        better = v > best_v
        best_v = np.where(better, v, best_v)
        best_rho = np.where(better, rho_c, best_rho)
        best_s_ = np.where(better, s_c, best_s_)
    best_v = np.maximum(best_v, 0.0)
    if single:
        return float(best_v[0]), float(best_rho[0]), float(best_s_[0])
    return best_v, best_rho, best_s_


# -- the estimator -----------------------------------------------------------

def _chunk_values(config, indices):
    lam, rejected = draw_samples(config, indices)
    values, _, _ = conditional_exponent(lam, config.r, config.params)
    return values, rejected


def sample_exponents(config):
    """Per-sample E(r | H) in sample-index order, plus the rejection count."""
    m = config.num_samples
    workers = max(1, int(config.workers))
    size = max(1, math.ceil(m / (4 * workers)))
    chunks = [list(range(i, min(i + size, m))) for i in range(0, m, size)]
    if workers == 1:
        parts = [_chunk_values(config, idx) for idx in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda idx: _chunk_values(config, idx), chunks))
    values = np.concatenate([p[0] for p in parts])
    return values, sum(p[1] for p in parts)


def aggregate(values, n):
    """Log-mean-exp combination of per-sample exponents."""
    values = np.asarray(values, dtype=float)
    n2 = float(n * n)
    e_min = values.min()
    w = np.exp(-n2 * (values - e_min))
    mean_w = w.mean()
    e_n = e_min - math.log(mean_w) / n2
    m = len(values)
    stderr = 0.0 if m < 2 else float(w.std(ddof=1) / (math.sqrt(m) * mean_w) / n2)
    ess = float(w.sum() ** 2 / (w * w).sum())
    return e_n, stderr, ess


def estimate_en(config, keep_samples=False):
    values, rejected = sample_exponents(config)
    e_n, stderr, ess = aggregate(values, config.n)
    if ess < ESS_WARN and config.num_samples >= ESS_WARN:
        warnings.warn(f"effective sample size {ess:.1f} below {ESS_WARN:g}; "
                      "E_N is dominated by a few samples", RuntimeWarning, stacklevel=2)
    logs = config.n ** 2 * values
    diag = {"min": float(logs.min()), "median": float(np.median(logs)),
            "max": float(logs.max())}
    log.debug("E_N=%.6g stderr=%.3g ess=%.1f", e_n, stderr, ess)
    return McEstimate(e_n, stderr, config.num_samples, diag, ess, rejected,
                      values if keep_samples else None)
