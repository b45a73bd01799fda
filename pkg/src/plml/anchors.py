"""Anchor points (k-means) and the instance similarity graph.

Anchors are the centers whose basis metrics the model learns; the graph
Laplacian couples nearby instances so their anchor weights vary smoothly.
Both constructions are deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ContractError
from .neighbors import knn_indices, pairwise_sq_dists

KERNELS = ("self_tuning", "binary")


@dataclass(frozen=True)
class AnchorModel:
    U: np.ndarray           # (m, d) anchor coordinates
    assignment: np.ndarray  # (n,) index of each training instance's anchor

    @property
    def m(self) -> int:
        return self.U.shape[0]


@dataclass(frozen=True)
class LaplacianGraph:
    S: sp.csr_matrix        # symmetric similarity, zero diagonal
    L: sp.csr_matrix        # degree - similarity
    sigmas: np.ndarray      # per-instance bandwidths (self-tuning kernel)
    knn_k: int
    kernel: str


def kmeans(X, m: int, seed: int = 0, *, max_iter: int = 300,
           history: list | None = None) -> AnchorModel:
    """Lloyd's algorithm with k-means++ seeding.

    Stops when the assignment reaches a fixpoint or after max_iter update
    rounds. An empty cluster is re-seeded from the point currently
    farthest from its own center (processed in cluster-index order, so
    repeated runs with one seed are identical). Requires m <= n. Passing a
    list as `history` collects the within-cluster sum of squares after
    each assignment, a non-increasing sequence.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ContractError(f"X must be 2-D, got shape {X.shape}")
    n = X.shape[0]
    if not 1 <= m <= n:
        raise ContractError(f"anchor count must be in [1, {n}], got {m}")
    rng = np.random.default_rng(seed)
    centers = X[_plus_plus_seeds(X, m, rng)].copy()

    assignment = _assign(X, centers)
    if history is not None:
        history.append(_wcss(X, centers, assignment))
    for _ in range(max_iter):
        centers, assignment = _reseed_empty(X, centers, assignment)
        for c in range(m):
            centers[c] = X[assignment == c].mean(axis=0)
        new_assignment = _assign(X, centers)
        if history is not None:
            history.append(_wcss(X, centers, new_assignment))
        if np.array_equal(new_assignment, assignment):
            assignment = new_assignment
            break
        assignment = new_assignment
    centers, assignment = _reseed_empty(X, centers, assignment)
    return AnchorModel(U=centers, assignment=assignment)


def _wcss(X, centers, assignment):
    diff = X - centers[assignment]
    return float(np.einsum("ij,ij->", diff, diff))


def _plus_plus_seeds(X, m, rng):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest_sq = pairwise_sq_dists(X, X[chosen])[:, 0]
    while len(chosen) < m:
        total = closest_sq.sum()
        if total > 0.0:
            p = closest_sq / total
            nxt = int(rng.choice(n, p=p))
        else:
            nxt = int(rng.integers(n))  # all mass on existing centers
        chosen.append(nxt)
        sq = pairwise_sq_dists(X, X[[nxt]])[:, 0]
        np.minimum(closest_sq, sq, out=closest_sq)
    return np.array(chosen, dtype=int)


def _assign(X, centers):
    return np.argmin(pairwise_sq_dists(X, centers), axis=1)


def _reseed_empty(X, centers, assignment):
    """Give each empty cluster the point farthest from its own center.

    Donors are only taken from clusters with two or more members so the
    donation cannot create a new hole; one pass per cluster suffices.
    """
    m = centers.shape[0]
    counts = np.bincount(assignment, minlength=m)
    if counts.min() > 0:
        return centers, assignment
    centers = centers.copy()
    assignment = assignment.copy()
    for _ in range(m):
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            break
        diff = X - centers[assignment]
        own_sq = np.einsum("ij,ij->i", diff, diff)
        own_sq[counts[assignment] < 2] = -1.0
        donor = int(np.argmax(own_sq))
        c = int(empty[0])
        centers[c] = X[donor]
        counts[assignment[donor]] -= 1
        assignment[donor] = c
        counts[c] += 1
    return centers, assignment


def build_anchor_distances(U, X) -> np.ndarray:
    """Squared Euclidean distances from each anchor to each instance, (m, n)."""
    return pairwise_sq_dists(U, X)


def build_laplacian(X, knn_k: int = 6, *, kernel: str = "self_tuning") -> LaplacianGraph:
    """Sparse graph Laplacian over the union-of-kNN edge set.

    Edge weights use the self-tuning kernel
    S_ij = exp(-d_ij^2 / (sigma_i * sigma_j)) with sigma_i the Euclidean
    distance from i to its knn_k-th neighbor, or constant 1 with
    kernel="binary". An instance whose knn_k-th neighbor is coincident
    gets the smallest nonzero neighbor distance as bandwidth instead (1.0
    if all its neighbors coincide), so coincident pairs take weight 1.
    """
    X = np.asarray(X, dtype=float)
    if kernel not in KERNELS:
        raise ContractError(f"kernel must be one of {KERNELS}, got {kernel!r}")
    n = X.shape[0]
    if n < 2:
        raise ContractError("graph needs at least 2 instances")
    if not 1 <= knn_k <= n - 1:
        raise ContractError(f"knn_k must be in [1, {n - 1}], got {knn_k}")

    idx, sq = knn_indices(X, knn_k, exclude_self=True)
    sigmas = np.sqrt(sq[:, -1])
    for i in np.flatnonzero(sigmas == 0.0):
        # duplicated instance: use its nearest distinct instance, or 1.0
        # when every other instance coincides with it
        row = pairwise_sq_dists(X[[i]], X)[0]
        nonzero = row[row > 0.0]
        sigmas[i] = float(np.sqrt(nonzero.min())) if nonzero.size else 1.0

    rows = np.repeat(np.arange(n), knn_k)
    cols = idx.ravel()
    if kernel == "binary":
        vals = np.ones(rows.shape[0])
    else:
        vals = np.exp(-sq.ravel() / (sigmas[rows] * sigmas[cols]))
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    # union of directed kNN edges; maximum keeps the weights symmetric
    # even when the two directed distance computations differ in the
    # last bit
    S = A.maximum(A.T)
    S.setdiag(0.0)
    S.eliminate_zeros()
    degrees = np.asarray(S.sum(axis=1)).ravel()
    L = (sp.diags(degrees) - S).tocsr()
    return LaplacianGraph(S=S, L=L, sigmas=sigmas, knn_k=knn_k, kernel=kernel)
