"""Shared fixtures: tiny labeled datasets, PSD samplers, trained toy models."""

import os
from pathlib import Path

import numpy as np
import pytest

from plml.core import Dataset
from plml.datasets import make_blobs
from plml.pipeline import ExperimentConfig, train_pipeline


def random_psd(rng, d, scale=1.0):
    """Random symmetric PSD matrix via A A^T."""
    A = rng.standard_normal((d, d))
    return scale * (A @ A.T)


def simplex_project_oracle(v):
    """Exhaustive KKT solve of min ||w - v||^2 on the probability simplex.

    Tries every support set (2^m - 1 candidates) and returns the unique w
    passing the stationarity and sign conditions. Only for small m.
    """
    v = np.asarray(v, dtype=float)
    m = len(v)
    for mask in range(1, 2 ** m):
        support = [i for i in range(m) if mask >> i & 1]
        theta = (sum(v[i] for i in support) - 1.0) / len(support)
        ok = True
        for i in range(m):
            if i in support:
                if v[i] - theta < -1e-12:
                    ok = False
                    break
            elif v[i] - theta > 1e-12:
                ok = False
                break
        if ok:
            w = np.zeros(m)
            for i in support:
                w[i] = max(v[i] - theta, 0.0)
            return w
    raise AssertionError("no KKT point found; oracle bug")


def plain_projected_gradient(x0, fun_grad, project, step, iterations):
    """Fixed-step projected gradient descent, the slow reference solver."""
    x = np.asarray(x0, dtype=float)
    best = fun_grad(x)[0]
    for _ in range(iterations):
        _, g = fun_grad(x)
        x = project(x - step * g)
        f = fun_grad(x)[0]
        if f < best:
            best = f
    return x, best


def random_simplex_rows(rng, n, m):
    V = rng.random((n, m)) + 1e-3
    return V / V.sum(axis=1, keepdims=True)


def random_labeled(rng, n, d, n_classes):
    """Random dataset with every class guaranteed at least one instance."""
    X = rng.standard_normal((n, d))
    y = np.concatenate(
        [np.arange(1, n_classes + 1), rng.integers(1, n_classes + 1, n - n_classes)]
    )
    rng.shuffle(y)
    return Dataset.from_arrays(X, y)


@pytest.fixture(scope="session")
def blobs_split():
    """One blob draw split 3:1 so train and test share the distribution."""
    full = make_blobs(120, n_classes=3, d=2, seed=3)
    idx = np.arange(120)
    return full.subset(idx[idx % 4 != 0]), full.subset(idx[idx % 4 == 0])


@pytest.fixture(scope="session")
def blobs_train(blobs_split):
    return blobs_split[0]


@pytest.fixture(scope="session")
def blobs_test(blobs_split):
    return blobs_split[1]


@pytest.fixture(scope="session")
def toy_config():
    return ExperimentConfig(
        variant="plml",
        m=4,
        alpha1_grid=(1.0,),
        use_pca=False,
        seed=0,
    )


@pytest.fixture(scope="session")
def toy_model_result(toy_config, blobs_train):
    """One shared full training run over the toy blobs."""
    return train_pipeline(toy_config, dataset=blobs_train)


@pytest.fixture(scope="session")
def toy_model(toy_model_result):
    """A small trained PLML model shared by predictor/io/ellipse tests."""
    return toy_model_result.model


def dataset_dir():
    """Where the benchmark files live, if the user fetched them."""
    override = os.environ.get("PLML_DATA_DIR")
    if override:
        return Path(override)
    return Path(__file__).resolve().parent.parent / "data"


def require_dataset(*names):
    base = dataset_dir()
    paths = [base / name for name in names]
    missing = [str(p) for p in paths if not p.exists()]
    if missing:
        pytest.skip(
            "benchmark files not present: "
            + ", ".join(missing)
            + " (fetch the UCI files into data/ or set PLML_DATA_DIR)"
        )
    return paths
