"""Dataset ingestion, synthetic instances, and trace serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import ColMatrix

__all__ = [
    "DataFormatError", "SyntheticSpec",
    "read_libsvm", "write_libsvm", "gen_synthetic", "write_trace",
    "TRACE_FIELDS",
]

TRACE_FIELDS = ("round", "elapsed_ms", "primal", "dual", "gap", "nnz",
                "local_updates", "theta")


class DataFormatError(ValueError):
    """Malformed input data file."""


def read_libsvm(path, transpose_to_columns=True):
    """Read a sparse dataset in the plain-text `label idx:val ...` format.

    Feature indices are 1-based and must be strictly ascending within a
    line. With `transpose_to_columns` (the default), examples become the
    ROWS of the returned matrix and features the COLUMNS, which is the
    layout the column-partitioned solver expects: one coefficient per
    feature, one shared-vector entry per example. With the flag off the
    matrix is transposed (examples as columns).

    Returns (matrix, labels); labels has one entry per example. An empty
    file is an error.
    """
    labels = []
    ex_rows, ex_cols, ex_vals = [], [], []
    n_features = 0
    with open(path, "r") as fh:
        example = 0
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            try:
                labels.append(float(parts[0]))
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: bad label {parts[0]!r}")
            prev = 0
            for tok in parts[1:]:
                idx, sep, val = tok.partition(":")
                if not sep:
                    raise DataFormatError(f"{path}:{lineno}: bad token {tok!r}")
                try:
                    idx = int(idx)
                    val = float(val)
                except ValueError:
                    raise DataFormatError(f"{path}:{lineno}: bad token {tok!r}")
                if idx <= 0:
                    raise DataFormatError(f"{path}:{lineno}: index {idx} not 1-based")
                if idx <= prev:
                    raise DataFormatError(
                        f"{path}:{lineno}: indices not strictly ascending")
                prev = idx
                n_features = max(n_features, idx)
                ex_rows.append(example)
                ex_cols.append(idx - 1)
                ex_vals.append(val)
            example += 1
    if example == 0:
        raise DataFormatError(f"{path}: empty dataset")
    labels = np.asarray(labels, dtype=np.float64)
    if transpose_to_columns:
        m = ColMatrix.from_coo(example, n_features, ex_rows, ex_cols, ex_vals)
    else:
        m = ColMatrix.from_coo(n_features, example, ex_cols, ex_rows, ex_vals)
    return m, labels


def write_libsvm(path, m, labels, transpose_to_columns=True):
    """Inverse of :func:`read_libsvm`; values are written round-trip exact."""
    if transpose_to_columns:
        if len(labels) != m.n_rows:
            raise ValueError("labels must have one entry per matrix row")
        n_examples = m.n_rows
        ex_of = m.rows
        feat_of = m._col_ids
    else:
        if len(labels) != m.n_cols:
            raise ValueError("labels must have one entry per matrix column")
        n_examples = m.n_cols
        ex_of = m._col_ids
        feat_of = m.rows
    order = np.lexsort((feat_of, ex_of))
    lines = [[repr(float(y))] for y in labels]
    for t in order:
        lines[ex_of[t]].append(f"{feat_of[t] + 1}:{float(m.vals[t])!r}")
    with open(path, "w") as fh:
        for parts in lines:
            fh.write(" ".join(parts) + "\n")
    return n_examples


@dataclass(frozen=True)
class SyntheticSpec:
    """Desk-scale random instance: sparse Gaussian data with a planted
    sparse coefficient vector."""

    n: int
    d: int
    density: float
    true_nnz: int
    noise_sd: float
    seed: int

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if not 0.0 < self.density <= 1.0:
            raise ValueError("density must lie in (0, 1]")
        if not 0 <= self.true_nnz <= self.n:
            raise ValueError("true_nnz must lie in [0, n]")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")


def gen_synthetic(sspec, classification=False):
    """Generate (matrix, labels, planted_coefficients), seeded.

    The matrix is d x n with Gaussian entries kept with probability
    `density` (each column keeps at least one entry so no variable is
    degenerate). Labels are A alpha_true + noise, passed through sign()
    for classification instances.
    """
    rng = np.random.default_rng(sspec.seed)
    cols = []
    for _ in range(sspec.n):
        mask = rng.random(sspec.d) < sspec.density
        if not mask.any():
            mask[rng.integers(0, sspec.d)] = True
        idx = np.nonzero(mask)[0]
        vals = rng.standard_normal(len(idx))
        cols.append(list(zip(idx.tolist(), vals.tolist())))
    m = ColMatrix.from_columns(sspec.d, cols)

    truth = np.zeros(sspec.n)
    support = rng.choice(sspec.n, size=sspec.true_nnz, replace=False)
    signs = rng.choice([-1.0, 1.0], size=sspec.true_nnz)
    truth[support] = signs * rng.uniform(0.5, 2.0, size=sspec.true_nnz)

    signal = m.mat_vec(truth)
    noise = sspec.noise_sd * rng.standard_normal(sspec.d)
    if classification:
        labels = np.sign(signal + noise)
        labels[labels == 0.0] = 1.0
    else:
        labels = signal + noise
    return m, labels, truth


def _trace_row(tr):
    theta = "" if tr.theta_estimate is None else repr(float(tr.theta_estimate))
    return (f"{tr.round},{float(tr.elapsed_ms)!r},{float(tr.primal)!r},"
            f"{float(tr.dual)!r},{float(tr.gap)!r},{tr.nnz},"
            f"{tr.local_updates},{theta}")


def write_trace(traces, path, format="csv"):
    """Serialize per-round records with round-trip-exact numbers.

    CSV columns: round,elapsed_ms,primal,dual,gap,nnz,local_updates,theta
    (theta left empty when absent). JSON is an array of objects with the
    same keys (theta null when absent).
    """
    if format == "csv":
        with open(path, "w") as fh:
            fh.write(",".join(TRACE_FIELDS) + "\n")
            for tr in traces:
                fh.write(_trace_row(tr) + "\n")
    elif format == "json":
        records = [
            {
                "round": tr.round,
                "elapsed_ms": float(tr.elapsed_ms),
                "primal": float(tr.primal),
                "dual": float(tr.dual),
                "gap": float(tr.gap),
                "nnz": tr.nnz,
                "local_updates": tr.local_updates,
                "theta": None if tr.theta_estimate is None
                         else float(tr.theta_estimate),
            }
            for tr in traces
        ]
        with open(path, "w") as fh:
            json.dump(records, fh, indent=1)
            fh.write("\n")
    else:
        raise ValueError(f"unknown trace format {format!r}")
