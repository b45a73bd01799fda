"""Instance-to-anchor weight learning on the row-wise probability simplex.

Each training instance gets a weight row over the anchors minimizing

    ||X - W U||_F^2  +  lambda1 * tr(W G)  +  lambda2 * tr(W^T L W)

subject to every row of W lying on the simplex. The first term asks the
weighted anchors to reconstruct the instance, the second pulls weight
toward nearby anchors (G holds anchor-to-instance squared distances), and
the third makes weights vary smoothly along the similarity graph L.
Because the objective is a convex quadratic, the accelerated projected-
gradient engine applies directly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ContractError
from .fista import TraceRow, fista

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightProblem:
    X: np.ndarray            # (n, d) instances
    U: np.ndarray            # (m, d) anchors
    G: np.ndarray            # (m, n) squared anchor-instance distances
    L: sp.spmatrix           # (n, n) graph Laplacian
    lambda1: float = 1.0
    lambda2: float = 100.0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        U = np.asarray(self.U, dtype=float)
        G = np.asarray(self.G, dtype=float)
        n, d = X.shape if X.ndim == 2 else (-1, -1)
        if U.ndim != 2 or U.shape[1] != d:
            raise ContractError(
                f"anchors must be (m, {d}), got {np.shape(self.U)}"
            )
        if G.shape != (U.shape[0], n):
            raise ContractError(
                f"G must be ({U.shape[0]}, {n}), got {G.shape}"
            )
        if self.L.shape != (n, n):
            raise ContractError(f"L must be ({n}, {n}), got {self.L.shape}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ContractError("regularization strengths must be >= 0")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "G", G)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.U.shape[0]


def weight_objective(prob: WeightProblem, W) -> float:
    W = _check_shape(prob, W)
    R = W @ prob.U - prob.X
    fit = float(np.vdot(R, R))
    near = float(np.vdot(W, prob.G.T))
    smooth = float(np.vdot(W, prob.L @ W))
    return fit + prob.lambda1 * near + prob.lambda2 * smooth


def weight_gradient(prob: WeightProblem, W) -> np.ndarray:
    W = _check_shape(prob, W)
    return (
        2.0 * ((W @ prob.U - prob.X) @ prob.U.T)
        + prob.lambda1 * prob.G.T
        + 2.0 * prob.lambda2 * (prob.L @ W)
    )


def project_simplex_rows(V) -> np.ndarray:
    """Euclidean projection of every row onto {w : w >= 0, sum w = 1}.

    Sort-based threshold method: with the row sorted descending, the
    threshold is the largest prefix mean-excess that stays below the
    smallest kept entry; everything below the threshold clips to zero.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[1] < 1:
        raise ContractError(f"V must be (n, m) with m >= 1, got {V.shape}")
    s = -np.sort(-V, axis=1)
    excess = np.cumsum(s, axis=1) - 1.0
    j = np.arange(1, V.shape[1] + 1)
    keep = s - excess / j > 0.0
    # keep[:, 0] is always true, and the true region is a prefix
    rho = keep.sum(axis=1) - 1
    theta = excess[np.arange(V.shape[0]), rho] / (rho + 1.0)
    return np.maximum(V - theta[:, None], 0.0)


def solve_weights(
    prob: WeightProblem,
    W0=None,
    tol: float = 1e-5,
    max_iter: int = 1000,
    *,
    callback=None,
    trace: Optional[List[TraceRow]] = None,
) -> np.ndarray:
    """Minimize the weight objective from a feasible start (uniform rows
    by default). Returns the weight matrix; convergence details flow
    through `trace`/`callback`, and a run that hits the iteration cap
    logs a warning and returns the best iterate seen.
    """
    if W0 is None:
        W0 = np.full((prob.n, prob.m), 1.0 / prob.m)
    else:
        W0 = _check_shape(prob, W0)

    def fun_grad(W):
        return weight_objective(prob, W), weight_gradient(prob, W)

    result = fista(
        W0, fun_grad, project_simplex_rows,
        tol=tol, max_iter=max_iter, callback=callback, trace=trace,
    )
    if not result.converged:
        log.warning(
            "weight solver stopped at the iteration cap (%d) with "
            "residual %.3e; returning the best iterate",
            max_iter, result.residual,
        )
    return result.x


def weighting_error_terms(x, weights, U, p: float = 1.0):
    """Per-instance diagnostic: (reconstruction error, anchor-distance term).

    The first is ||x - weights @ U||, the second
    sum_b weights_b * ||x - u_b||^(1+p); together they bound how well a
    smooth local weighting can track a target function around x.
    """
    x = np.asarray(x, dtype=float)
    weights = np.asarray(weights, dtype=float)
    U = np.asarray(U, dtype=float)
    if weights.shape != (U.shape[0],) or x.shape != (U.shape[1],):
        raise ContractError(
            f"shape mismatch: x {x.shape}, weights {weights.shape}, U {U.shape}"
        )
    if np.any(weights < 0):
        raise ContractError("weights must be nonnegative")
    recon = float(np.linalg.norm(x - weights @ U))
    dists = np.linalg.norm(U - x, axis=1)
    near = float(np.sum(weights * dists ** (1.0 + p)))
    return recon, near


def assign_test_weights(X_query, X_train, W) -> np.ndarray:
    """Copy each query's weight row from its nearest training instance."""
    from .neighbors import nearest_index

    X_query = np.atleast_2d(np.asarray(X_query, dtype=float))
    X_train = np.asarray(X_train, dtype=float)
    W = np.asarray(W, dtype=float)
    if W.shape[0] != X_train.shape[0]:
        raise ContractError(
            f"need one weight row per training instance, got {W.shape[0]} "
            f"rows for {X_train.shape[0]} instances"
        )
    return W[nearest_index(X_query, X_train)]


def _check_shape(prob: WeightProblem, W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.shape != (prob.n, prob.m):
        raise ContractError(
            f"W must be ({prob.n}, {prob.m}), got {W.shape}"
        )
    return W
