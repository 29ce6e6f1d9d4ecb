import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import shardcd as sc


def random_matrix(rng, n, d, density=0.4):
    """Random sparse columns plus the triplet lists they were built from."""
    columns = []
    for _ in range(n):
        mask = rng.random(d) < density
        if not mask.any():
            mask[rng.integers(0, d)] = True
        idx = np.nonzero(mask)[0]
        vals = rng.standard_normal(len(idx))
        columns.append(list(zip(idx.tolist(), vals.tolist())))
    return sc.ColMatrix.from_columns(d, columns), columns


def regression_instance(seed, n=40, d=24, density=0.4, noise=0.1):
    m, b, truth = sc.gen_synthetic(
        sc.SyntheticSpec(n=n, d=d, density=density, true_nnz=max(2, n // 8),
                         noise_sd=noise, seed=seed))
    return m, b, truth


def lasso_objective(m, b, frac=0.15):
    fit = sc.DataFit(kind=sc.LEAST_SQUARES, labels=b)
    lam = frac * float(np.max(np.abs(m.mat_tvec(b))))
    return sc.make_objective(fit, "l1", lam)


def enet_objective(b, lam=0.3, eta=0.5):
    fit = sc.DataFit(kind=sc.LEAST_SQUARES, labels=b)
    return sc.make_objective(fit, "elastic_net", lam, eta=eta)


@pytest.fixture
def small_instance():
    m, b, _ = regression_instance(seed=5)
    return m, b
