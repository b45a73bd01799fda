"""Trained model container and the 1-nearest-neighbor decision rule.

Distances are taken from the query's side: each query gets a weight row
over the anchors (how depends on the variant), the row picks its local
metric, and the nearest training instance under that metric votes. Two
independent distance paths compute the same quantity, one materializing
each query's combined metric and one summing weighted per-basis
distances; the tests hold them to agreement, so either checks the other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .anchors import AnchorModel
from .core import check_weight_rows
from .errors import ContractError
from .neighbors import nearest_index, pairwise_sq_dists
from .preprocess import PreprocessModel, apply_preprocess
from .weights import assign_test_weights

VARIANTS = ("plml", "sml", "cblml")

_QUERY_BLOCK = 256


@dataclass(frozen=True)
class Hyperparams:
    m: int = 20
    lambda1: float = 1.0
    lambda2: float = 100.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    k1: int = 3
    k2: int = 3
    knn_k: int = 6


@dataclass(frozen=True)
class PlmlModel:
    """Everything needed to classify: the feature pipeline, the anchors,
    the basis metrics, and the training instances with their weights."""

    preprocess: PreprocessModel
    anchors: AnchorModel
    basis: np.ndarray        # (m, d, d)
    W: np.ndarray            # (n, m) training-instance weights
    train_X: np.ndarray      # (n, d), already preprocessed
    train_y: np.ndarray      # (n,) labels in 1..c
    label_names: tuple
    variant: str = "plml"
    hyperparams: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ContractError(
                f"variant must be one of {VARIANTS}, got {self.variant!r}"
            )
        basis = np.asarray(self.basis, dtype=float)
        W = np.asarray(self.W, dtype=float)
        X = np.asarray(self.train_X, dtype=float)
        y = np.asarray(self.train_y, dtype=int)
        n, d = X.shape if X.ndim == 2 else (-1, -1)
        m = basis.shape[0] if basis.ndim == 3 else -1
        if basis.ndim != 3 or basis.shape[1:] != (d, d):
            raise ContractError(
                f"basis must be (m, {d}, {d}), got {basis.shape}"
            )
        if W.shape != (n, m):
            raise ContractError(f"W must be ({n}, {m}), got {W.shape}")
        if y.shape != (n,):
            raise ContractError(f"train_y must be ({n},), got {y.shape}")
        if d != self.preprocess.n_output_features:
            raise ContractError(
                "training data width does not match the feature pipeline "
                f"({d} vs {self.preprocess.n_output_features})"
            )
        if self.anchors.U.shape != (m, d):
            raise ContractError(
                f"anchors must be ({m}, {d}), got {self.anchors.U.shape}"
            )
        check_weight_rows(W, name="model weights")
        _check_variant_structure(self.variant, W, self.anchors)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "train_X", X)
        object.__setattr__(self, "train_y", y)
        object.__setattr__(self, "label_names", tuple(self.label_names))

    @property
    def n(self) -> int:
        return self.train_X.shape[0]

    @property
    def d(self) -> int:
        return self.train_X.shape[1]

    @property
    def m(self) -> int:
        return self.basis.shape[0]


def _check_variant_structure(variant, W, anchors: AnchorModel):
    if variant == "sml":
        if W.shape[1] != 1 or not np.all(W == 1.0):
            raise ContractError(
                "single-metric variant requires a single all-ones weight column"
            )
    elif variant == "cblml":
        expect = np.zeros_like(W)
        expect[np.arange(W.shape[0]), anchors.assignment] = 1.0
        if not np.array_equal(W, expect):
            raise ContractError(
                "cluster-based variant requires one-hot weights matching "
                "the anchor assignment"
            )


def query_weights(model: PlmlModel, X_query) -> np.ndarray:
    """Anchor weights for preprocessed query rows, per the model variant.

    Learned-weight models copy the row of the nearest training instance;
    the single-metric variant returns ones; the cluster-based variant
    returns the one-hot row of the nearest anchor.
    """
    X_query = np.atleast_2d(np.asarray(X_query, dtype=float))
    if X_query.shape[1] != model.d:
        raise ContractError(
            f"queries must have width {model.d}, got {X_query.shape[1]}"
        )
    if model.variant == "sml":
        return np.ones((X_query.shape[0], 1))
    if model.variant == "cblml":
        Wq = np.zeros((X_query.shape[0], model.m))
        Wq[np.arange(X_query.shape[0]),
           nearest_index(X_query, model.anchors.U)] = 1.0
        return Wq
    return assign_test_weights(X_query, model.train_X, model.W)


def predict_batch(
    model: PlmlModel,
    X,
    *,
    preprocessed: bool = False,
    path: str = "auto",
    block: int = _QUERY_BLOCK,
) -> np.ndarray:
    """Labels (1..c) for a batch of rows; raw rows go through the feature
    pipeline first. Queries are processed in blocks so memory stays at
    block * n_train floats. Exact distance ties vote for the
    lowest-index training instance.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not preprocessed:
        X = apply_preprocess(model.preprocess, X)
    Wq = query_weights(model, X)
    path = _resolve_path(model, path)
    cache = _PerBasisCache(model) if path == "per_basis" else None
    labels = np.empty(X.shape[0], dtype=int)
    for start in range(0, X.shape[0], block):
        stop = min(start + block, X.shape[0])
        sq = _sq_dists_block(model, X[start:stop], Wq[start:stop], path, cache)
        labels[start:stop] = model.train_y[np.argmin(sq, axis=1)]
    return labels


def predict(model: PlmlModel, x, *, preprocessed: bool = False) -> int:
    """Label (1..c) for a single instance. `model.label_names[label - 1]`
    recovers the original class name."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ContractError(f"predict takes a single 1-D row, got {x.shape}")
    return int(predict_batch(model, x[None, :], preprocessed=preprocessed)[0])


def leave_one_out_accuracy(model: PlmlModel, *, path: str = "auto") -> float:
    """1-NN accuracy on the training set with each instance held out of
    its own neighbor search (its learned weight row is still used)."""
    path = _resolve_path(model, path)
    cache = _PerBasisCache(model) if path == "per_basis" else None
    hits = 0
    for start in range(0, model.n, _QUERY_BLOCK):
        stop = min(start + _QUERY_BLOCK, model.n)
        sq = _sq_dists_block(
            model, model.train_X[start:stop], model.W[start:stop], path, cache,
        )
        sq[np.arange(stop - start), np.arange(start, stop)] = np.inf
        pred = model.train_y[np.argmin(sq, axis=1)]
        hits += int(np.sum(pred == model.train_y[start:stop]))
    return hits / model.n


def _resolve_path(model, path):
    if path == "auto":
        # per-basis costs ~m gemms per block, the combined form ~d; pick
        # the cheaper contraction
        return "per_basis" if model.m <= model.d else "combined"
    if path not in ("combined", "per_basis"):
        raise ContractError(f"unknown distance path {path!r}")
    return path


class _PerBasisCache:
    """Per-basis symmetric square roots and pre-transformed training data."""

    def __init__(self, model: PlmlModel):
        evals, evecs = np.linalg.eigh(model.basis)
        roots = np.sqrt(np.maximum(evals, 0.0))
        self.factors = np.einsum("mab,mb,mcb->mac", evecs, roots, evecs)
        self.train_t = np.einsum("nd,mde->mne", model.train_X, self.factors)


def _sq_dists_block(model, Xq, Wq, path, cache) -> np.ndarray:
    if path == "per_basis":
        out = np.zeros((Xq.shape[0], model.n))
        for b in range(model.m):
            col = Wq[:, b]
            if not np.any(col):
                continue
            sq = pairwise_sq_dists(Xq @ cache.factors[b], cache.train_t[b])
            out += col[:, None] * sq
        return out
    # combined path: one local metric per query
    Xt = model.train_X
    out = np.empty((Xq.shape[0], model.n))
    for r in range(Xq.shape[0]):
        M = np.tensordot(Wq[r], model.basis, axes=1)
        TM = Xt @ M
        out[r] = (
            np.einsum("nd,nd->n", TM, Xt)
            - 2.0 * (TM @ Xq[r])
            + Xq[r] @ M @ Xq[r]
        )
    return np.maximum(out, 0.0, out=out)
