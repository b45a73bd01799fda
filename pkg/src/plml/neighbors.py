"""Euclidean pairwise distances and k-nearest-neighbor lookups.

Everything here breaks ties toward the lowest index and processes queries
in blocks so memory stays bounded at block_size * n_reference floats.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError

BLOCK = 1024


def pairwise_sq_dists(A, B) -> np.ndarray:
    """Squared Euclidean distances, shape (len(A), len(B)), clipped at 0."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise ContractError(
            f"point sets must be 2-D with equal widths, got {A.shape}, {B.shape}"
        )
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :]
    sq -= 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return sq


def knn_indices(X, k, *, exclude_self: bool = True):
    """Indices (n, k) of each row's k nearest rows, plus their sq distances.

    Neighbors are ordered nearest-first; exact distance ties resolve to the
    lower index (argsort with stable order on the full row).
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    limit = n - 1 if exclude_self else n
    if not 1 <= k <= limit:
        raise ContractError(f"k must be in [1, {limit}], got {k}")
    idx = np.empty((n, k), dtype=int)
    dist = np.empty((n, k), dtype=float)
    for start in range(0, n, BLOCK):
        stop = min(start + BLOCK, n)
        sq = pairwise_sq_dists(X[start:stop], X)
        if exclude_self:
            sq[np.arange(stop - start), np.arange(start, stop)] = np.inf
        order = np.argsort(sq, axis=1, kind="stable")[:, :k]
        idx[start:stop] = order
        dist[start:stop] = np.take_along_axis(sq, order, axis=1)
    return idx, dist


def nearest_index(queries, refs) -> np.ndarray:
    """Index of the Euclidean-nearest reference row for each query row."""
    queries = np.asarray(queries, dtype=float)
    refs = np.asarray(refs, dtype=float)
    out = np.empty(queries.shape[0], dtype=int)
    for start in range(0, queries.shape[0], BLOCK):
        stop = min(start + BLOCK, queries.shape[0])
        sq = pairwise_sq_dists(queries[start:stop], refs)
        out[start:stop] = np.argmin(sq, axis=1)
    return out
