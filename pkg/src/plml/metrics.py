"""Large-margin learning of the anchor basis metrics.

The primal asks each basis metric to be PSD, to keep same-class target
pairs close (weighted by the instances' anchor weights and alpha2), and
to satisfy every triplet's unit margin softly with hinge slack. Dualizing
with multipliers gamma_t in [0, 1] per triplet leaves an unconstrained-
in-the-metrics problem whose solution is available in closed form, so
what remains is a smooth box-constrained minimization over gamma:

    h(gamma) = -sum_t gamma_t
               + (1 / (4 alpha1)) * sum_b || (K_b)_+ - K_b ||_F^2

where, per basis b,

    K_b = alpha2 * sum_pairs  W[i, b] * outer(x_i - x_j)
          - sum_t gamma_t * W[i_t, b] * (outer(x_it - x_kt) - outer(x_it - x_jt))

and (K)_+ zeroes K's negative eigenvalues. The optimal basis metrics are
recovered as M_b = ((K_b)_+ - K_b) / (2 alpha1), PSD by construction.

Two evaluation paths compute identical quantities: a flat path that
materializes the T x d^2 stack of constraint outer products (fastest),
and a factored path that keeps only the T x d difference vectors and
pays an extra matmul (used automatically when the flat stack would be
too large). Every objective/gradient evaluation performs exactly one
batched eigendecomposition, i.e. one per basis metric.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ContractError
from .fista import TraceRow, fista
from .triplets import TripletSet

log = logging.getLogger(__name__)

# Above this many bytes for the flattened constraint stack, switch to the
# factored evaluation path.
FLAT_BYTES_LIMIT = 256 * 2**20

_PAIR_CHUNK = 4096


def box_project(gamma) -> np.ndarray:
    """Projection onto the box [0, 1]^T."""
    return np.clip(np.asarray(gamma, dtype=float), 0.0, 1.0)


def psd_project(K) -> np.ndarray:
    """Nearest (Frobenius) PSD matrix: symmetrize, clip negative eigenvalues."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ContractError(f"K must be square, got shape {K.shape}")
    K = 0.5 * (K + K.T)
    evals, evecs = np.linalg.eigh(K)
    out = (evecs * np.maximum(evals, 0.0)) @ evecs.T
    return 0.5 * (out + out.T)


class _DualCore:
    """Prepared arrays shared by every alpha1 run on the same data."""

    def __init__(self, X, W, triplets: TripletSet, alpha2: float):
        X = np.asarray(X, dtype=float)
        W = np.asarray(W, dtype=float)
        T = triplets.count
        d = X.shape[1]
        self.T, self.d, self.m = T, d, W.shape[1]

        self.E_ij = X[triplets.i] - X[triplets.j]    # (T, d)
        self.E_ik = X[triplets.i] - X[triplets.k]
        self.V = W[triplets.i]                       # (T, m)

        # pull-term constant, per basis: alpha2 * sum_p W[i_p, b] outer(dp)
        self.Pflat = np.zeros((self.m, d * d))
        pairs = triplets.pairs
        for start in range(0, pairs.shape[0], _PAIR_CHUNK):
            stop = min(start + _PAIR_CHUNK, pairs.shape[0])
            dp = X[pairs[start:stop, 0]] - X[pairs[start:stop, 1]]
            self.Pflat += W[pairs[start:stop, 0]].T @ _outer_flat(dp)
        self.Pflat *= alpha2

        self.flat = T * d * d * 8 <= FLAT_BYTES_LIMIT
        if self.flat:
            self.Cflat = np.empty((T, d * d))
            for start in range(0, T, _PAIR_CHUNK):
                stop = min(start + _PAIR_CHUNK, T)
                self.Cflat[start:stop] = (
                    _outer_flat(self.E_ik[start:stop])
                    - _outer_flat(self.E_ij[start:stop])
                )

    def assemble_flat(self, gamma) -> np.ndarray:
        """K for every basis, flattened to (m, d*d)."""
        if self.flat:
            return self.Pflat - (self.V * gamma[:, None]).T @ self.Cflat
        scaled = self.V * gamma[:, None]
        K = np.empty((self.m, self.d * self.d))
        for b in range(self.m):
            t1 = self.E_ik.T @ (self.E_ik * scaled[:, b, None])
            t2 = self.E_ij.T @ (self.E_ij * scaled[:, b, None])
            K[b] = self.Pflat[b] - (t1 - t2).ravel()
        return K

    def inner_products(self, Rflat) -> np.ndarray:
        """<R_b, C_t> for every triplet/basis combination, shape (T, m)."""
        if self.flat:
            return self.Cflat @ Rflat.T
        out = np.empty((self.T, self.m))
        for b in range(self.m):
            R = Rflat[b].reshape(self.d, self.d)
            a = np.einsum("td,td->t", self.E_ik @ R, self.E_ik)
            c = np.einsum("td,td->t", self.E_ij @ R, self.E_ij)
            out[:, b] = a - c
        return out


@dataclass(eq=False)
class MetricProblem:
    """Dual problem instance; prepared arrays are built once and shared
    across `with_alpha1` copies so an alpha1 grid search pays the setup
    cost once."""

    X: np.ndarray
    W: np.ndarray
    triplets: TripletSet
    alpha1: float
    alpha2: float = 1.0
    eig_count: int = 0
    eval_count: int = 0
    _core: Optional[_DualCore] = field(default=None, repr=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        W = np.asarray(self.W, dtype=float)
        if X.ndim != 2 or W.ndim != 2 or W.shape[0] != X.shape[0]:
            raise ContractError(
                f"X and W must be 2-D with matching rows, got "
                f"{np.shape(self.X)} and {np.shape(self.W)}"
            )
        if self.triplets.n != X.shape[0]:
            raise ContractError(
                f"triplets were built for {self.triplets.n} instances, "
                f"data has {X.shape[0]}"
            )
        if self.alpha1 <= 0:
            raise ContractError(f"alpha1 must be > 0, got {self.alpha1}")
        if self.alpha2 < 0:
            raise ContractError(f"alpha2 must be >= 0, got {self.alpha2}")
        self.X, self.W = X, W

    @property
    def core(self) -> _DualCore:
        if self._core is None:
            self._core = _DualCore(self.X, self.W, self.triplets, self.alpha2)
        return self._core

    def with_alpha1(self, alpha1: float) -> "MetricProblem":
        """Copy sharing the prepared arrays but with its own counters."""
        clone = MetricProblem(
            X=self.X, W=self.W, triplets=self.triplets,
            alpha1=alpha1, alpha2=self.alpha2,
        )
        clone._core = self.core
        return clone

    def _decompose(self, gamma):
        gamma = np.asarray(gamma, dtype=float)
        if gamma.shape != (self.triplets.count,):
            raise ContractError(
                f"gamma must have shape ({self.triplets.count},), "
                f"got {gamma.shape}"
            )
        core = self.core
        Kflat = core.assemble_flat(gamma)
        K = Kflat.reshape(core.m, core.d, core.d)
        K = 0.5 * (K + np.transpose(K, (0, 2, 1)))
        evals, evecs = np.linalg.eigh(K)
        self.eig_count += core.m
        self.eval_count += 1
        return gamma, K, evals, evecs


def assemble_K(prob: MetricProblem, gamma) -> np.ndarray:
    """The dual's per-basis matrices K_b at this gamma, shape (m, d, d)."""
    gamma = np.asarray(gamma, dtype=float)
    core = prob.core
    if gamma.shape != (prob.triplets.count,):
        raise ContractError(
            f"gamma must have shape ({prob.triplets.count},), got {gamma.shape}"
        )
    K = core.assemble_flat(gamma).reshape(core.m, core.d, core.d)
    return 0.5 * (K + np.transpose(K, (0, 2, 1)))


def dual_objective(prob: MetricProblem, gamma) -> float:
    gamma, _, evals, _ = prob._decompose(gamma)
    neg = np.minimum(evals, 0.0)
    return float(-gamma.sum() + (neg * neg).sum() / (4.0 * prob.alpha1))


def dual_gradient(prob: MetricProblem, gamma) -> np.ndarray:
    _, _, grad = _fused_eval(prob, gamma)
    return grad


def _fused_eval(prob: MetricProblem, gamma):
    """(gamma, objective, gradient) with a single eigendecomposition."""
    gamma, _, evals, evecs = prob._decompose(gamma)
    neg = np.minimum(evals, 0.0)
    obj = float(-gamma.sum() + (neg * neg).sum() / (4.0 * prob.alpha1))
    # R_b = (K_b)_+ - K_b = U relu(-lambda) U^T
    Rflat = _reconstruct_flat(evecs, -neg)
    inner = prob.core.inner_products(Rflat)
    grad = -1.0 + (prob.core.V * inner).sum(axis=1) / (2.0 * prob.alpha1)
    return gamma, obj, grad


def recover_metrics(prob: MetricProblem, gamma) -> np.ndarray:
    """Basis metrics ((K_b)_+ - K_b) / (2 alpha1); PSD by construction."""
    _, _, evals, evecs = prob._decompose(gamma)
    neg = np.maximum(-evals, 0.0)
    M = _reconstruct_flat(evecs, neg).reshape(prob.core.m, prob.core.d, prob.core.d)
    M /= 2.0 * prob.alpha1
    return 0.5 * (M + np.transpose(M, (0, 2, 1)))


def solve_basis_metrics(
    prob: MetricProblem,
    tol: float = 1e-5,
    max_iter: int = 1000,
    *,
    callback=None,
    trace: Optional[List[TraceRow]] = None,
    return_gamma: bool = False,
):
    """Run the box-constrained dual from gamma = 0 and recover the metrics.

    Returns the (m, d, d) stack of basis metrics, or (metrics, gamma)
    when return_gamma is set. An empty triplet set yields all-zero
    metrics (the dual optimum: every K_b stays PSD, so nothing projects).
    Logs a warning when the iteration cap is reached; the best iterate
    seen is used, so the dual objective never exceeds its value at the
    start.
    """
    T = prob.triplets.count
    if T == 0:
        m, d = prob.W.shape[1], prob.X.shape[1]
        metrics = np.zeros((m, d, d))
        if return_gamma:
            return metrics, np.zeros(0)
        return metrics

    def fun_grad(gamma):
        _, obj, grad = _fused_eval(prob, gamma)
        return obj, grad

    result = fista(
        np.zeros(T), fun_grad, box_project,
        tol=tol, max_iter=max_iter, callback=callback, trace=trace,
    )
    if not result.converged:
        log.warning(
            "metric solver stopped at the iteration cap (%d) with "
            "residual %.3e; using the best iterate",
            max_iter, result.residual,
        )
    metrics = recover_metrics(prob, result.x)
    if return_gamma:
        return metrics, result.x
    return metrics


def _outer_flat(D) -> np.ndarray:
    """Rows of D to flattened outer products, (rows, d*d)."""
    return np.einsum("ti,tj->tij", D, D).reshape(D.shape[0], -1)


def _reconstruct_flat(evecs, nonneg) -> np.ndarray:
    """Batched U diag(nonneg) U^T, flattened to (m, d*d)."""
    out = np.einsum("mab,mb,mcb->mac", evecs, nonneg, evecs)
    return out.reshape(out.shape[0], -1)
