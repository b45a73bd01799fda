"""Core data model: labeled datasets and local Mahalanobis distances.

A local metric for instance i is a convex combination of shared basis
metrics, M_i = sum_b weights[i, b] * basis[b], with the weights of each
instance lying on the probability simplex. Distances taken "from" an
instance use that instance's metric, so the distance field is asymmetric
by design: d(a -> b) uses a's metric, d(b -> a) uses b's.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError

# Tolerance used by the validators below; matches what the model loader
# and the tests expect of any metric produced by this package.
SYMMETRY_TOL = 1e-10
EIGENVALUE_TOL = 1e-10
SIMPLEX_TOL = 1e-8

# Squared distances may dip slightly below zero from rounding; anything
# past this is treated as an indefinite metric rather than noise.
_NEGATIVE_SQ_LIMIT = -1e-6


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus integer labels 1..n_classes.

    `label_names` maps the internal integer label (position + 1) back to
    whatever the source file called the class. Construct via `from_arrays`
    unless the labels are already encoded.
    """

    X: np.ndarray
    y: np.ndarray
    label_names: tuple = field(default=())

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=int)
        if X.ndim != 2:
            raise ContractError(f"X must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ContractError(
                f"y must have shape ({X.shape[0]},), got {y.shape}"
            )
        if X.shape[0] == 0:
            raise ContractError("dataset must contain at least one instance")
        if not np.all(np.isfinite(X)):
            raise ContractError("X contains non-finite values")
        names = self.label_names
        if len(names) == 0:
            names = tuple(str(k) for k in range(1, int(y.max(initial=0)) + 1))
        if y.min(initial=1) < 1 or y.max(initial=1) > len(names):
            raise ContractError(
                f"labels must lie in 1..{len(names)}, got range "
                f"[{y.min()}, {y.max()}]"
            )
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "label_names", tuple(names))

    @classmethod
    def from_arrays(cls, X, labels) -> "Dataset":
        """Encode arbitrary (sortable) labels into 1..c and build a Dataset.

        Numeric-looking labels sort numerically so that "10" lands after
        "2"; everything else sorts lexicographically.
        """
        labels = list(labels)
        uniq = sorted(set(labels), key=_label_sort_key)
        index = {name: k + 1 for k, name in enumerate(uniq)}
        y = np.array([index[v] for v in labels], dtype=int)
        names = tuple(_canonical_label_name(v) for v in uniq)
        return cls(np.asarray(X, dtype=float), y, names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def subset(self, idx) -> "Dataset":
        """Row subset sharing the label table (classes may become empty)."""
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], self.label_names)


def _label_sort_key(value):
    try:
        return (0, float(value), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(value))


def _canonical_label_name(value) -> str:
    try:
        f = float(value)
    except (TypeError, ValueError):
        return str(value)
    if f == int(f):
        return str(int(f))
    return str(value)


def check_metric(M, *, name: str = "metric") -> np.ndarray:
    """Validate a single metric matrix: square, symmetric, PSD within tol.

    Returns the validated array (as float, not copied when possible).
    This runs an eigendecomposition, so it belongs at trust boundaries
    (file loads, user-supplied matrices), not in inner loops.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ContractError(f"{name} contains non-finite values")
    asym = np.max(np.abs(M - M.T), initial=0.0)
    if asym > SYMMETRY_TOL:
        raise ContractError(f"{name} is asymmetric (max |M - M^T| = {asym:.3e})")
    lo = float(np.linalg.eigvalsh(M).min()) if M.shape[0] else 0.0
    if lo < -EIGENVALUE_TOL:
        raise ContractError(
            f"{name} is not positive semidefinite (min eigenvalue {lo:.3e})"
        )
    return M


def check_basis(basis, *, name: str = "basis") -> np.ndarray:
    """Validate a stack of basis metrics with shape (m, d, d)."""
    try:
        basis = np.asarray(basis, dtype=float)
    except ValueError as exc:  # ragged list of mismatched matrices
        raise ContractError(f"{name} matrices must share one shape: {exc}") from exc
    if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
        raise ContractError(
            f"{name} must have shape (m, d, d), got {basis.shape}"
        )
    for b in range(basis.shape[0]):
        check_metric(basis[b], name=f"{name}[{b}]")
    return basis


def check_weight_rows(W, *, name: str = "weights") -> np.ndarray:
    """Validate that every row of W lies on the probability simplex."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise ContractError(f"{name} must be 2-D, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise ContractError(f"{name} contains non-finite values")
    if W.min(initial=0.0) < -SIMPLEX_TOL:
        raise ContractError(f"{name} has negative entries below tolerance")
    if W.shape[0]:
        err = np.max(np.abs(W.sum(axis=1) - 1.0))
        if err > SIMPLEX_TOL:
            raise ContractError(
                f"{name} rows must sum to 1 (max deviation {err:.3e})"
            )
    return W


def mahalanobis_sq(M, a, b) -> float:
    """Squared Mahalanobis distance (a - b)^T M (a - b).

    M is assumed symmetric PSD; only shapes are checked here. Tiny
    negative results from rounding are clamped to zero, genuinely
    negative ones raise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    M = np.asarray(M, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError(
            f"points must be 1-D and share a shape, got {a.shape}, {b.shape}"
        )
    if M.shape != (a.shape[0], a.shape[0]):
        raise ContractError(
            f"metric shape {M.shape} does not match point dimension {a.shape[0]}"
        )
    diff = a - b
    val = float(diff @ M @ diff)
    return _clamp_sq(val)


def local_distance_sq(weights, basis, a, b) -> float:
    """Squared distance under the metric sum_b weights[b] * basis[b].

    Computed as the same weighted sum of per-basis squared distances,
    which is exactly equal and avoids forming the combined matrix.
    """
    weights = np.asarray(weights, dtype=float)
    basis = np.asarray(basis, dtype=float)
    if weights.ndim != 1 or basis.ndim != 3 or weights.shape[0] != basis.shape[0]:
        raise ContractError(
            f"need one weight per basis metric, got {weights.shape} weights "
            f"and {basis.shape} basis"
        )
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = a - b
    # einsum gives sum_b w_b * diff^T basis_b diff in one pass
    val = float(np.einsum("b,p,bpq,q->", weights, diff, basis, diff))
    return _clamp_sq(val)


def combine_metric(weights, basis) -> np.ndarray:
    """Materialize the combined metric sum_b weights[b] * basis[b]."""
    weights = np.asarray(weights, dtype=float)
    basis = np.asarray(basis, dtype=float)
    if weights.ndim != 1 or basis.ndim != 3 or weights.shape[0] != basis.shape[0]:
        raise ContractError(
            f"need one weight per basis metric, got {weights.shape} weights "
            f"and {basis.shape} basis"
        )
    return np.tensordot(weights, basis, axes=1)


def _clamp_sq(val: float) -> float:
    if val >= 0.0:
        return val
    if val < _NEGATIVE_SQ_LIMIT:
        raise ContractError(
            f"squared distance is negative ({val:.3e}); "
            "the metric is not positive semidefinite"
        )
    return 0.0
