"""Data-local quadratic subproblem and its coordinate-descent solver.

Each worker owns a column block and, per round, approximately minimizes

    const + w^T (A d) + (sigma'/(2 tau)) ||A d||^2 + sum_{i in block} l(alpha_i + d_i)

over block-supported updates d, where w is the gradient of the data-fit
term at the round's shared prediction vector and `const` is that
vector's share of the data-fit value. Single-coordinate restrictions
have closed-form minimizers (shrinkage steps), so the solver is plain
randomized coordinate descent with an epoch budget; more epochs buy a
better approximation at the cost of per-round work.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objectives import L1, ell_value

__all__ = [
    "SubproblemView", "LocalResult",
    "subproblem_value", "coordinate_update", "solve_local", "measure_theta",
]


@dataclass
class SubproblemView:
    """Read-only slice of shared state a worker needs for one round.

    `alpha_block` holds the current coefficients of the owned columns,
    `w` the data-fit gradient at the shared prediction vector, and
    `f_share` the worker's share of the data-fit value (supplied by the
    driver so local objective values are comparable across workers).
    """

    matrix: object
    block: np.ndarray
    w: np.ndarray
    alpha_block: np.ndarray
    sigma_prime: float
    tau: float
    reg: object
    f_share: float = 0.0

    def __post_init__(self):
        if self.sigma_prime <= 0:
            raise ValueError("sigma_prime must be positive")
        if self.tau <= 0:
            raise ValueError("tau must be positive")


@dataclass
class LocalResult:
    """Outcome of one local solve.

    delta_alpha maps local column position -> coefficient change;
    delta_v is the running product A * delta, maintained incrementally
    and equal to the fresh product up to accumulation rounding.
    """

    delta_alpha: dict
    delta_v: np.ndarray
    updates_done: int
    clamp_hits: int = 0
    frozen_cols: int = 0


def subproblem_value(view, delta, z, debug=False):
    """Evaluate the local objective at a sparse update.

    `delta` maps local positions to coefficient changes and `z` is the
    caller-maintained product A * delta. With debug=True, z is
    re-verified against a fresh product of the accumulated delta.
    """
    if debug:
        z_ref = np.zeros(view.matrix.n_rows)
        for j, dv in delta.items():
            view.matrix.axpy_column(int(view.block[j]), dv, z_ref)
        if np.max(np.abs(z - z_ref), initial=0.0) > 1e-8 * (1.0 + np.max(np.abs(z_ref), initial=0.0)):
            raise ValueError("stale local product: z != A delta")
    totals = view.alpha_block.astype(np.float64, copy=True)
    for j, dv in delta.items():
        totals[j] += dv
    quad = 0.5 * (view.sigma_prime / view.tau) * float(np.dot(z, z))
    return (view.f_share + float(np.dot(view.w, z)) + quad
            + float(np.sum(ell_value(view.reg, totals))))


def _l1_step(c, g_lin, q, lam, bound):
    """Closed-form single-coordinate minimizer for the box-restricted L1 term.

    Returns (new_total, clamped). The box clamp is defense in depth: for
    the default bound and monotone descent from zero it never engages.
    """
    target = c - g_lin / q
    thr = lam / q
    if target > thr:
        raw = target - thr
    elif target < -thr:
        raw = target + thr
    else:
        raw = 0.0
    if raw > bound:
        return bound, True
    if raw < -bound:
        return -bound, True
    return raw, False


def _enet_step(c, g_lin, q, lam, eta):
    """Closed-form single-coordinate minimizer for the elastic-net term."""
    num = q * c - g_lin
    thr = lam * (1.0 - eta)
    den = q + lam * eta
    if num > thr:
        return (num - thr) / den
    if num < -thr:
        return (num + thr) / den
    return 0.0


def coordinate_update(reg, current_total, g_lin, q):
    """Exact minimizer of the local objective along one coordinate.

    `current_total` is the coordinate's current value alpha_i + d_i,
    `g_lin` the local objective's smooth-part derivative there, and
    q > 0 the smooth-part curvature (sigma'/tau times the squared
    column norm). The smooth part is exactly quadratic along a
    coordinate, so a shrinkage step is the exact minimizer.
    """
    if q <= 0:
        raise ValueError("curvature q must be positive")
    if reg.kind == L1:
        new, _ = _l1_step(current_total, g_lin, q, reg.lam, reg.support_bound)
        return new
    return _enet_step(current_total, g_lin, q, reg.lam, reg.eta)


def solve_local(view, h, seed):
    """Run h epochs of randomized coordinate descent on the subproblem.

    Performs h * block_size single-coordinate updates on uniformly
    sampled (with replacement) columns of positive norm; zero-norm
    columns are frozen at their current value and counted in the
    result. The running product z = A * delta is maintained by sparse
    in-place updates. Deterministic given (view, h, seed); the local
    objective never increases across updates.
    """
    if h < 1:
        raise ValueError("local epoch count h must be >= 1")
    m = view.matrix
    block = view.block
    d = m.n_rows
    z = np.zeros(d)
    sq = m.col_sq_norms
    pool = [j for j in range(len(block)) if sq[block[j]] > 0.0]
    frozen = len(block) - len(pool)
    if not pool:
        return LocalResult({}, z, 0, 0, frozen)

    sp_tau = view.sigma_prime / view.tau
    cols = [m.column(int(block[j])) for j in pool]
    xw = np.array([np.dot(v, view.w[r]) for r, v in cols])
    qs = sp_tau * np.array([sq[block[j]] for j in pool])
    totals = view.alpha_block[pool].astype(np.float64, copy=True)

    rng = np.random.default_rng(seed)
    n_updates = h * len(block)
    draws = rng.integers(0, len(pool), size=n_updates).tolist()

    reg = view.reg
    clamp_hits = 0
    if reg.kind == L1:
        lam, bound = reg.lam, reg.support_bound
        for t in draws:
            r, v = cols[t]
            g_lin = xw[t] + sp_tau * np.dot(v, z[r])
            new, clamped = _l1_step(totals[t], g_lin, qs[t], lam, bound)
            clamp_hits += clamped
            dlt = new - totals[t]
            if dlt != 0.0:
                totals[t] = new
                z[r] += dlt * v
    else:
        lam, eta = reg.lam, reg.eta
        for t in draws:
            r, v = cols[t]
            g_lin = xw[t] + sp_tau * np.dot(v, z[r])
            new = _enet_step(totals[t], g_lin, qs[t], lam, eta)
            dlt = new - totals[t]
            if dlt != 0.0:
                totals[t] = new
                z[r] += dlt * v

    start = view.alpha_block[pool]
    delta = {pool[t]: float(totals[t] - start[t])
             for t in range(len(pool)) if totals[t] != start[t]}
    return LocalResult(delta, z, n_updates, clamp_hits, frozen)


def _cd_minimize(view, max_sweeps, tol=1e-14):
    """Deterministic cyclic coordinate descent on the subproblem.

    Sweeps until the per-sweep objective improvement drops below `tol`
    or the sweep budget runs out. Returns (delta map, z, value); used as
    the reference when grading a budgeted local solve.
    """
    m = view.matrix
    block = view.block
    sq = m.col_sq_norms
    pool = [j for j in range(len(block)) if sq[block[j]] > 0.0]
    z = np.zeros(m.n_rows)
    if not pool:
        return {}, z, subproblem_value(view, {}, z)

    sp_tau = view.sigma_prime / view.tau
    cols = [m.column(int(block[j])) for j in pool]
    xw = np.array([np.dot(v, view.w[r]) for r, v in cols])
    qs = sp_tau * np.array([sq[block[j]] for j in pool])
    totals = view.alpha_block[pool].astype(np.float64, copy=True)
    reg = view.reg
    is_l1 = reg.kind == L1

    def value():
        pen = view.alpha_block.astype(np.float64, copy=True)
        pen[pool] = totals
        quad = 0.5 * sp_tau * float(np.dot(z, z))
        return (view.f_share + float(np.dot(view.w, z)) + quad
                + float(np.sum(ell_value(reg, pen))))

    prev = value()
    for _ in range(max_sweeps):
        for t in range(len(pool)):
            r, v = cols[t]
            g_lin = xw[t] + sp_tau * np.dot(v, z[r])
            if is_l1:
                new, _ = _l1_step(totals[t], g_lin, qs[t], reg.lam, reg.support_bound)
            else:
                new = _enet_step(totals[t], g_lin, qs[t], reg.lam, reg.eta)
            dlt = new - totals[t]
            if dlt != 0.0:
                totals[t] = new
                z[r] += dlt * v
        cur = value()
        if prev - cur < tol:
            prev = cur
            break
        prev = cur
    start = view.alpha_block[pool]
    delta = {pool[t]: float(totals[t] - start[t])
             for t in range(len(pool)) if totals[t] != start[t]}
    return delta, z, prev


def measure_theta(view, result, oracle_iters=400):
    """Grade a local solve against a near-exact reference.

    Returns (G(result) - G(ref)) / (G(0) - G(ref)) clamped to [0, 1]:
    0 means the budgeted solve matched the reference, 1 means it made
    no progress. The reference is an extended cyclic coordinate-descent
    run capped at `oracle_iters` sweeps. Returns 0.0 when the zero
    update is already optimal (denominator below 1e-14). Single-run
    diagnostic, not a certified bound.
    """
    g_zero = subproblem_value(view, {}, np.zeros(view.matrix.n_rows))
    g_res = subproblem_value(view, result.delta_alpha, result.delta_v)
    _, _, g_ref = _cd_minimize(view, max_sweeps=oracle_iters)
    denom = g_zero - g_ref
    if denom < 1e-14:
        return 0.0
    return float(min(max((g_res - g_ref) / denom, 0.0), 1.0))
