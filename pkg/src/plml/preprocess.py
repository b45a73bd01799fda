"""Feature pipeline: drop constant features, standardize, row-normalize, PCA.

The fitted model is a frozen bag of arrays so that applying it is pure
arithmetic and the same model can be serialized and reapplied bit-for-bit.
Stage order is fixed as standardize -> normalize -> PCA, except that
`pca_position="before_norm"` swaps the last two. PCA keeps the smallest
number of leading components whose eigenvalue mass reaches the variance
target, with a sign convention (largest-magnitude entry positive) so the
decomposition is reproducible across runs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Dataset
from .errors import ContractError

logger = logging.getLogger(__name__)

# A feature whose std is below this is treated as constant and dropped.
_CONSTANT_STD = 1e-12

PCA_POSITIONS = ("after_norm", "before_norm")


@dataclass(frozen=True)
class PreprocessModel:
    feature_means: np.ndarray          # raw means of the kept features
    feature_stds: np.ndarray           # raw stds of the kept features
    kept: np.ndarray                   # indices into the raw feature axis
    standardize: bool
    normalize: bool
    pca_mean: Optional[np.ndarray]     # None when PCA is off
    pca_components: Optional[np.ndarray]   # (n_kept, n_components), columns
    retained_variance_fraction: float
    variance_target: float
    pca_position: str
    n_input_features: int

    @property
    def n_output_features(self) -> int:
        if self.pca_components is not None:
            return self.pca_components.shape[1]
        return len(self.kept)


def fit_preprocess(
    train,
    use_pca: bool = False,
    variance_target: float = 0.95,
    *,
    standardize: bool = True,
    normalize: bool = True,
    pca_position: str = "after_norm",
) -> PreprocessModel:
    """Fit the pipeline on training data (a Dataset or a 2-D array).

    Requires at least two rows so that variances are meaningful. Raises
    ContractError if every feature is constant or the target/position
    arguments are out of range.
    """
    X = train.X if isinstance(train, Dataset) else np.asarray(train, dtype=float)
    if X.ndim != 2:
        raise ContractError(f"training data must be 2-D, got shape {X.shape}")
    if X.shape[0] < 2:
        raise ContractError("fitting needs at least 2 instances")
    if pca_position not in PCA_POSITIONS:
        raise ContractError(
            f"pca_position must be one of {PCA_POSITIONS}, got {pca_position!r}"
        )
    if use_pca and not 0.0 < variance_target <= 1.0:
        raise ContractError(
            f"variance_target must be in (0, 1], got {variance_target}"
        )

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    kept = np.flatnonzero(stds > _CONSTANT_STD)
    if kept.size == 0:
        raise ContractError("all features are constant; nothing to learn from")

    Z = _stage_one(X, means, stds, kept, standardize)
    if normalize and pca_position == "after_norm":
        Z, _ = _row_normalize(Z)
    # (with pca_position="before_norm" the PCA is fitted on the
    # unnormalized stage-one output, matching apply_preprocess)

    pca_mean = None
    components = None
    retained = 1.0
    if use_pca:
        pca_mean = Z.mean(axis=0)
        cov = np.cov(Z - pca_mean, rowvar=False, ddof=1)
        cov = np.atleast_2d(cov)
        evals, evecs = np.linalg.eigh(cov)
        evals = evals[::-1]
        evecs = evecs[:, ::-1]
        evals = np.maximum(evals, 0.0)
        total = evals.sum()
        if total <= 0.0:
            raise ContractError("training data has zero total variance")
        frac = np.cumsum(evals) / total
        k = int(np.searchsorted(frac, variance_target - 1e-12) + 1)
        k = min(k, len(evals))
        components = _fix_signs(evecs[:, :k])
        retained = float(frac[k - 1])

    return PreprocessModel(
        feature_means=means[kept],
        feature_stds=stds[kept],
        kept=kept,
        standardize=standardize,
        normalize=normalize,
        pca_mean=pca_mean,
        pca_components=components,
        retained_variance_fraction=retained,
        variance_target=float(variance_target),
        pca_position=pca_position,
        n_input_features=X.shape[1],
    )


def identity_preprocess(d: int) -> PreprocessModel:
    """A no-op pipeline for data that is already in model space."""
    if d < 1:
        raise ContractError(f"need at least one feature, got {d}")
    return PreprocessModel(
        feature_means=np.zeros(d),
        feature_stds=np.ones(d),
        kept=np.arange(d),
        standardize=False,
        normalize=False,
        pca_mean=None,
        pca_components=None,
        retained_variance_fraction=1.0,
        variance_target=0.95,
        pca_position="after_norm",
        n_input_features=d,
    )


def apply_preprocess(model: PreprocessModel, X, *, return_zero_mask: bool = False):
    """Apply a fitted pipeline to new rows, in the order it was fitted.

    Rows that are exactly zero where normalization happens cannot be scaled
    to unit norm; they pass through as zeros, a warning is logged, and with
    return_zero_mask=True the boolean row mask comes back alongside the
    matrix.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_input_features:
        raise ContractError(
            f"expected shape (*, {model.n_input_features}), got {X.shape}"
        )
    Z = X[:, model.kept]
    zero_mask = np.zeros(X.shape[0], dtype=bool)
    if model.standardize:
        Z = (Z - model.feature_means) / model.feature_stds
    if model.pca_position == "before_norm":
        Z = _project(model, Z)
        if model.normalize:
            Z, zero_mask = _row_normalize(Z)
    else:
        if model.normalize:
            Z, zero_mask = _row_normalize(Z)
        Z = _project(model, Z)
    if zero_mask.any():
        logger.warning(
            "%d row(s) were exactly zero at normalization and stay zero",
            int(zero_mask.sum()),
        )
    if return_zero_mask:
        return Z, zero_mask
    return Z


def _stage_one(X, means, stds, kept, standardize):
    Z = X[:, kept]
    if standardize:
        Z = (Z - means[kept]) / stds[kept]
    return np.array(Z, dtype=float)


def _row_normalize(Z):
    norms = np.linalg.norm(Z, axis=1, keepdims=True)
    zero = norms[:, 0] == 0.0
    norms[zero] = 1.0  # all-zero rows pass through unchanged
    return Z / norms, zero


def _project(model, Z):
    if model.pca_components is None:
        return Z
    return (Z - model.pca_mean) @ model.pca_components


def _fix_signs(components):
    """Flip each column so its largest-magnitude entry is positive."""
    flip = np.sign(components[np.argmax(np.abs(components), axis=0),
                              np.arange(components.shape[1])])
    flip[flip == 0.0] = 1.0
    return components * flip
