"""Data-fit terms, separable regularizers, conjugates, and gap certificates.

The solved problem is

    min_alpha  f(A alpha) + sum_i l_i(alpha_i)

with a smooth data-fit f (least squares or logistic) and a separable
regularizer (L1 or elastic net). Certificates come from the conjugate
(dual) problem

    min_w  f*(w) + sum_i l_i*(-x_i^T w)

evaluated at the mapped point w = grad f(A alpha); the sum of the two
objective values is the duality gap, a computable upper bound on
suboptimality.

The pure-L1 term is treated as the absolute value restricted to the box
[-B, B]. The restriction makes the conjugate finite everywhere (so the
gap is always defined); with the default B = f(0)/lambda and a monotone
solver started at zero it is never active, so iterates and solutions
match the unrestricted problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import expit, xlogy

__all__ = [
    "LEAST_SQUARES", "LOGISTIC", "L1", "ELASTIC_NET",
    "DataFit", "Regularizer", "ObjectiveSpec", "DualDomainError",
    "f_value", "f_grad", "f_conj",
    "ell_value", "ell_conj", "soft_threshold",
    "primal_value", "dual_value", "duality_gap", "GapReport",
    "default_support_bound", "make_objective", "gap_is_optimal",
]

LEAST_SQUARES = "least_squares"
LOGISTIC = "logistic"
L1 = "l1"
ELASTIC_NET = "elastic_net"

# slack on the logistic conjugate box constraint before a point is
# rejected as an invalid dual candidate
_BOX_SLACK = 1e-12


class DualDomainError(ValueError):
    """Raised when a vector lies outside the domain of the conjugate."""


@dataclass(frozen=True, eq=False)
class DataFit:
    """Smooth data-fit term: kind, labels, and smoothness constant.

    Both built-in kinds are 1-smooth, so `tau` is fixed at 1. Logistic
    labels must be exactly +-1.
    """

    kind: str
    labels: np.ndarray
    tau: float = 1.0

    def __post_init__(self):
        if self.kind not in (LEAST_SQUARES, LOGISTIC):
            raise ValueError(f"unknown data-fit kind {self.kind!r}")
        labels = np.ascontiguousarray(self.labels, dtype=np.float64)
        if not np.all(np.isfinite(labels)):
            raise ValueError("labels must be finite")
        if self.kind == LOGISTIC and not np.all(np.abs(labels) == 1.0):
            raise ValueError("logistic labels must be exactly +1 or -1")
        if self.tau != 1.0:
            raise ValueError("built-in data-fit kinds are 1-smooth (tau = 1)")
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self):
        return len(self.labels)


@dataclass(frozen=True)
class Regularizer:
    """Separable penalty sum_i l(alpha_i).

    l1:           l(a) = lam * |a| on [-B, B], +inf outside.
    elastic_net:  l(a) = lam * (eta * a^2 / 2 + (1 - eta) * |a|).

    The L1 kind always carries a finite support bound B; the elastic
    net is strongly convex with constant mu = lam * eta.
    """

    kind: str
    lam: float
    eta: float = 1.0
    support_bound: float = math.inf

    def __post_init__(self):
        if self.kind not in (L1, ELASTIC_NET):
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.kind == ELASTIC_NET and not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.kind == L1 and not (math.isfinite(self.support_bound)
                                    and self.support_bound > 0):
            raise ValueError("l1 regularizer requires a finite support bound")

    @property
    def strong_convexity(self):
        return self.lam * self.eta if self.kind == ELASTIC_NET else 0.0


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    data_fit: DataFit
    reg: Regularizer

    def check_dims(self, m):
        if self.data_fit.dim != m.n_rows:
            raise ValueError(
                f"label length {self.data_fit.dim} != matrix rows {m.n_rows}")


def default_support_bound(fit, lam):
    """Canonical L1 coefficient box: f(0) / lambda.

    Any monotone solver started at zero keeps lam * |alpha_i| below the
    initial objective value f(0), so this bound never binds.
    """
    return f_value(fit, np.zeros(fit.dim)) / lam


def make_objective(fit, reg_kind, lam, eta=None, support_bound=None):
    """Assemble an ObjectiveSpec, filling in the default L1 box.

    A caller-supplied `support_bound` may only enlarge the default;
    shrinking it would change the solution set.
    """
    if reg_kind == L1:
        b_default = default_support_bound(fit, lam)
        if support_bound is None:
            bound = b_default
        elif support_bound < b_default:
            raise ValueError(
                f"support bound {support_bound} below default {b_default}; "
                "override may only increase it")
        else:
            bound = float(support_bound)
        reg = Regularizer(kind=L1, lam=lam, support_bound=bound)
    elif reg_kind == ELASTIC_NET:
        if eta is None:
            raise ValueError("elastic net requires eta")
        reg = Regularizer(kind=ELASTIC_NET, lam=lam, eta=float(eta))
    else:
        raise ValueError(f"unknown regularizer kind {reg_kind!r}")
    return ObjectiveSpec(data_fit=fit, reg=reg)


# ----------------------------------------------------------------------
# smooth part

def f_value(fit, v):
    """Evaluate the data-fit term at a length-d prediction vector."""
    v = np.asarray(v, dtype=np.float64)
    if len(v) != fit.dim:
        raise ValueError(f"vector length {len(v)} != label length {fit.dim}")
    b = fit.labels
    if fit.kind == LEAST_SQUARES:
        r = v - b
        return 0.5 * float(np.dot(r, r))
    return float(np.sum(np.logaddexp(0.0, -b * v)))


def f_grad(fit, v):
    """Gradient of the data-fit term; also the dual candidate map.

    Least squares: v - b (the residual). Logistic: entrywise
    -b_j / (1 + exp(b_j v_j)), always strictly inside the conjugate box.
    """
    v = np.asarray(v, dtype=np.float64)
    if len(v) != fit.dim:
        raise ValueError(f"vector length {len(v)} != label length {fit.dim}")
    b = fit.labels
    if fit.kind == LEAST_SQUARES:
        return v - b
    return -b * expit(-b * v)


def f_conj(fit, w):
    """Convex conjugate f*(w).

    Least squares: ||w||^2 / 2 + w^T b. Logistic: the binary entropy
    form sum_j [(1 + w_j b_j) log(1 + w_j b_j) - w_j b_j log(-w_j b_j)]
    with the box constraint -w_j b_j in [0, 1] and 0 log 0 = 0 at the
    endpoints. Points outside the box (beyond a 1e-12 slack) raise
    DualDomainError, signalling an invalid dual candidate.
    """
    w = np.asarray(w, dtype=np.float64)
    if len(w) != fit.dim:
        raise ValueError(f"vector length {len(w)} != label length {fit.dim}")
    if fit.kind == LEAST_SQUARES:
        return 0.5 * float(np.dot(w, w)) + float(np.dot(w, fit.labels))
    t = -w * fit.labels
    if np.any(t < -_BOX_SLACK) or np.any(t > 1.0 + _BOX_SLACK):
        raise DualDomainError("logistic conjugate argument outside [0, 1] box")
    t = np.clip(t, 0.0, 1.0)
    return float(np.sum(xlogy(t, t) + xlogy(1.0 - t, 1.0 - t)))


# ----------------------------------------------------------------------
# separable part (elementwise on scalars or arrays)

def soft_threshold(x, t):
    """Shrink x towards zero by t: sign(x) * max(|x| - t, 0)."""
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def ell_value(reg, a):
    """Per-coordinate penalty value; +inf outside the L1 box."""
    a = np.asarray(a, dtype=np.float64)
    aa = np.abs(a)
    if reg.kind == L1:
        out = np.where(aa <= reg.support_bound, reg.lam * aa, np.inf)
    else:
        out = reg.lam * (0.5 * reg.eta * a * a + (1.0 - reg.eta) * aa)
    return float(out) if np.isscalar(a) or a.ndim == 0 else out


def ell_conj(reg, x):
    """Per-coordinate conjugate penalty l*(x).

    l1 (box-restricted):  0 for |x| <= lam, else B (|x| - lam);
    globally B-Lipschitz.
    elastic net:  ( [|x|/lam - (1 - eta)]_+ )^2 * lam / (2 eta).
    """
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    if reg.kind == L1:
        out = np.where(ax <= reg.lam, 0.0,
                       reg.support_bound * (ax - reg.lam))
    else:
        t = np.maximum(ax / reg.lam - (1.0 - reg.eta), 0.0)
        out = reg.lam * t * t / (2.0 * reg.eta)
    return float(out) if np.isscalar(x) or x.ndim == 0 else out


# ----------------------------------------------------------------------
# certificates

class GapReport(NamedTuple):
    gap: float
    primal: float
    dual: float
    w: np.ndarray


def primal_value(spec, m, a, v, debug=False):
    """Objective value f(v) + sum_i l(a_i) with caller-maintained v = A a.

    Returns +inf when a coordinate violates the L1 support bound. With
    debug=True, v is re-verified against a fresh product.
    """
    a = np.asarray(a, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if debug:
        v_ref = m.mat_vec(a)
        if np.max(np.abs(v - v_ref)) > 1e-8 * (1.0 + np.max(np.abs(v_ref))):
            raise ValueError("stale prediction vector: v != A a")
    pen = ell_value(spec.reg, a)
    total = float(np.sum(pen))
    if math.isinf(total):
        return math.inf
    return f_value(spec.data_fit, v) + total


def dual_value(spec, m, w):
    """Dual objective f*(w) + sum_i l*(-x_i^T w)."""
    corr = -m.mat_tvec(w)
    return f_conj(spec.data_fit, w) + float(np.sum(ell_conj(spec.reg, corr)))


def duality_gap(spec, m, a, v, debug=False):
    """Certificate at the iterate a (with v = A a).

    Maps a to the dual candidate w = grad f(v) and returns
    (gap, primal, dual, w) with gap = dual + primal >= -1e-9 up to
    rounding; gap bounds the primal suboptimality from above. An
    infinite primal (support-bound violation) is an error: the iterate
    left the level set the certificate is defined on.
    """
    primal = primal_value(spec, m, a, v, debug=debug)
    if math.isinf(primal):
        raise ValueError("primal value is infinite; iterate outside support bound")
    w = f_grad(spec.data_fit, v)
    dual = dual_value(spec, m, w)
    return GapReport(gap=dual + primal, primal=primal, dual=dual, w=w)


def gap_is_optimal(gap, primal, rel_tol=1e-6):
    """Default test for 'converged': gap small relative to max(1, |primal|)."""
    return gap <= rel_tol * max(1.0, abs(primal))
