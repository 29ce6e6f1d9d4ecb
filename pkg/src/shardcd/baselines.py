"""Single-process reference optimizers for benchmark comparisons.

Two baselines: full proximal gradient descent, and mini-batch parallel
coordinate descent (one shrinkage step per sampled coordinate, all
applied together with a damping factor beta / batch). The single-update,
one-coordinate-per-worker extreme of the mini-batch scheme is the
classic high-communication configuration the round-based solver is
meant to improve on.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .data import sq_spectral_norm
from .engine import RoundTrace, SolveResult, SolverState, _worker_seed
from .objectives import L1, duality_gap, f_grad, soft_threshold

__all__ = ["BaselineConfig", "prox_gd_step", "mb_cd_round", "solve_baseline"]

PROX_GD = "prox_gd"
MB_CD = "mb_cd"


@dataclass
class BaselineConfig:
    """Settings for one baseline run.

    For prox_gd, a None step_size resolves to tau / ||A||^2 (power
    iteration estimate), the largest step with guaranteed descent. For
    mb_cd, batch_size coordinates are sampled per round and updates are
    scaled by beta_scale / batch_size with beta_scale in [1, batch].
    """

    kind: str
    step_size: float | None = None
    batch_size: int = 1
    beta_scale: float = 1.0
    max_rounds: int = 1000
    gap_tol: float = 1e-6
    seed: int = 0
    trace_every: int = 1

    def __post_init__(self):
        if self.kind not in (PROX_GD, MB_CD):
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 1.0 <= self.beta_scale <= self.batch_size:
            raise ValueError("beta_scale must lie in [1, batch_size]")
        if self.trace_every < 1:
            raise ValueError("trace_every must be >= 1")


def _prox(reg, u, step):
    if reg.kind == L1:
        out = soft_threshold(u, step * reg.lam)
        return np.clip(out, -reg.support_bound, reg.support_bound)
    shrink = soft_threshold(u, step * reg.lam * (1.0 - reg.eta))
    return shrink / (1.0 + step * reg.lam * reg.eta)


def prox_gd_step(state, spec, m, step):
    """One full proximal gradient step; the shared vector is recomputed."""
    if step <= 0:
        raise ValueError("step must be positive")
    g = m.mat_tvec(f_grad(spec.data_fit, state.v))
    alpha = _prox(spec.reg, state.alpha - step * g, step)
    return SolverState(alpha=alpha, v=m.mat_vec(alpha), round=state.round + 1)


def mb_cd_round(state, spec, m, b, beta, seed):
    """One mini-batch coordinate-descent round.

    Samples b distinct coordinates, computes each one's solo shrinkage
    update against the current gradient (curvature ||x_i||^2 / tau, no
    cross terms), and applies all of them scaled by beta / b, updating
    the shared vector incrementally. Zero-norm coordinates stay frozen.
    """
    n = m.n_cols
    if not 1 <= b <= n:
        raise ValueError("batch size must lie in [1, n]")
    if not 1.0 <= beta <= b:
        raise ValueError("beta must lie in [1, batch]")
    rng = np.random.default_rng(seed)
    coords = rng.choice(n, size=b, replace=False)
    w = f_grad(spec.data_fit, state.v)
    tau = spec.data_fit.tau
    sq = m.col_sq_norms
    reg = spec.reg
    scale = beta / b

    alpha = state.alpha.copy()
    v = state.v.copy()
    for i in coords:
        i = int(i)
        if sq[i] <= 0.0:
            continue
        q = sq[i] / tau
        g_lin = m.col_dot(i, w)
        c = alpha[i]
        if reg.kind == L1:
            target = c - g_lin / q
            new = soft_threshold(target, reg.lam / q)
            new = min(max(new, -reg.support_bound), reg.support_bound)
        else:
            num = q * c - g_lin
            thr = reg.lam * (1.0 - reg.eta)
            den = q + reg.lam * reg.eta
            new = soft_threshold(num, thr) / den
        dlt = scale * (new - c)
        if dlt != 0.0:
            alpha[i] = c + dlt
            m.axpy_column(i, dlt, v)
    return SolverState(alpha=alpha, v=v, round=state.round + 1)


def solve_baseline(cfg, spec, m):
    """Drive a baseline to the gap tolerance, recording the same traces
    as the round-based solver so runs are directly comparable."""
    spec.check_dims(m)
    state = SolverState.initial(m)
    step = cfg.step_size
    if cfg.kind == PROX_GD and step is None:
        norm_sq = sq_spectral_norm(m, iters=60, seed=cfg.seed)
        if norm_sq <= 0.0:
            raise ValueError("cannot pick a step size for an all-zero matrix")
        step = spec.data_fit.tau / norm_sq

    traces = []
    diag = {"wall_times": [], "step_size": step}

    def certify(t, updates):
        rep = duality_gap(spec, m, state.alpha, state.v)
        traces.append(RoundTrace(
            round=t, primal=rep.primal, dual=rep.dual, gap=rep.gap,
            nnz=int(np.count_nonzero(state.alpha)), local_updates=updates,
            elapsed_ms=0.0, theta_estimate=None))
        return rep.gap

    gap = certify(0, 0)
    if gap <= cfg.gap_tol:
        return SolveResult(state, traces, "gap_tol", diag)
    stop_reason = "max_rounds"
    for t in range(1, cfg.max_rounds + 1):
        t0 = time.perf_counter()
        if cfg.kind == PROX_GD:
            state = prox_gd_step(state, spec, m, step)
            updates = m.n_cols
        else:
            state = mb_cd_round(state, spec, m, cfg.batch_size, cfg.beta_scale,
                                _worker_seed(cfg.seed, 0, t))
            updates = cfg.batch_size
        diag["wall_times"].append(time.perf_counter() - t0)
        if t % cfg.trace_every == 0 or t == cfg.max_rounds:
            gap = certify(t, updates)
            if gap <= cfg.gap_tol:
                stop_reason = "gap_tol"
                break
    return SolveResult(state, traces, stop_reason, diag)
