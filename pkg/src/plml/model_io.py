"""Versioned JSON persistence for trained models.

Arrays are stored as nested lists; Python's float repr round-trips
float64 exactly, so save -> load reproduces every coefficient bit for
bit. Loading validates the document against the same invariants the
in-memory constructors enforce and reports violations as DataError.
"""

from __future__ import annotations

import json

import numpy as np

from .anchors import AnchorModel
from .core import check_basis
from .errors import DataError, PlmlError
from .predictor import Hyperparams, PlmlModel
from .preprocess import PreprocessModel

FORMAT_VERSION = 1


def save_model(model: PlmlModel, path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "variant": model.variant,
        "label_names": list(model.label_names),
        "hyperparams": vars(model.hyperparams).copy(),
        "preprocess": _preprocess_doc(model.preprocess),
        "anchors": {
            "U": model.anchors.U.tolist(),
            "assignment": model.anchors.assignment.tolist(),
        },
        "basis": model.basis.tolist(),
        "W": model.W.tolist(),
        "train_X": model.train_X.tolist(),
        "train_y": model.train_y.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path) -> PlmlModel:
    """Read a model document, checking the format version, array shapes,
    simplex rows, and basis-metric symmetry/positive-semidefiniteness.
    Any violation raises DataError naming the problem."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DataError(f"{path}: expected a JSON object at the top level")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(
            f"{path}: unsupported format_version {version!r} "
            f"(this build reads {FORMAT_VERSION})"
        )
    try:
        model = _build(doc)
    except KeyError as exc:
        raise DataError(f"{path}: missing field {exc}") from exc
    except (PlmlError, TypeError, ValueError) as exc:
        # constructor invariants double as the file validators
        raise DataError(f"{path}: invalid model: {exc}") from exc
    return model


def _build(doc) -> PlmlModel:
    pre_doc = doc["preprocess"]
    pre = PreprocessModel(
        feature_means=np.asarray(pre_doc["feature_means"], dtype=float),
        feature_stds=np.asarray(pre_doc["feature_stds"], dtype=float),
        kept=np.asarray(pre_doc["kept"], dtype=int),
        standardize=bool(pre_doc["standardize"]),
        normalize=bool(pre_doc["normalize"]),
        pca_mean=_opt_array(pre_doc["pca_mean"]),
        pca_components=_opt_array(pre_doc["pca_components"]),
        retained_variance_fraction=float(pre_doc["retained_variance_fraction"]),
        variance_target=float(pre_doc["variance_target"]),
        pca_position=str(pre_doc["pca_position"]),
        n_input_features=int(pre_doc["n_input_features"]),
    )
    anchors = AnchorModel(
        U=np.asarray(doc["anchors"]["U"], dtype=float),
        assignment=np.asarray(doc["anchors"]["assignment"], dtype=int),
    )
    basis = check_basis(np.asarray(doc["basis"], dtype=float))
    hp = Hyperparams(**doc["hyperparams"])
    return PlmlModel(
        preprocess=pre,
        anchors=anchors,
        basis=basis,
        W=np.asarray(doc["W"], dtype=float),
        train_X=np.asarray(doc["train_X"], dtype=float),
        train_y=np.asarray(doc["train_y"], dtype=int),
        label_names=tuple(doc["label_names"]),
        variant=str(doc["variant"]),
        hyperparams=hp,
    )


def _preprocess_doc(pre: PreprocessModel) -> dict:
    return {
        "feature_means": pre.feature_means.tolist(),
        "feature_stds": pre.feature_stds.tolist(),
        "kept": pre.kept.tolist(),
        "standardize": pre.standardize,
        "normalize": pre.normalize,
        "pca_mean": None if pre.pca_mean is None else pre.pca_mean.tolist(),
        "pca_components": (
            None if pre.pca_components is None else pre.pca_components.tolist()
        ),
        "retained_variance_fraction": pre.retained_variance_fraction,
        "variance_target": pre.variance_target,
        "pca_position": pre.pca_position,
        "n_input_features": pre.n_input_features,
    }


def _opt_array(value):
    if value is None:
        return None
    return np.asarray(value, dtype=float)
