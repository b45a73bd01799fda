"""End-to-end training, cross-validation, model comparison, and sweeps.

The training pipeline runs load -> preprocess -> anchors -> graph ->
weights -> triplets -> alpha1 selection -> basis metrics, skipping the
graph and weight stages for the variants whose weights are fixed by
construction. Errors raised inside a stage are re-raised with the stage
name prefixed so failures point at the step that broke.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, fields, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .anchors import (
    AnchorModel,
    build_anchor_distances,
    build_laplacian,
    kmeans,
)
from .core import Dataset
from .errors import ContractError, DataError
from .evaluation import ComparisonReport, accuracy, build_report, euclidean_1nn_predict
from .datasets import load_dataset
from .fista import TraceRow
from .metrics import MetricProblem, solve_basis_metrics
from .predictor import Hyperparams, PlmlModel, predict_batch
from .preprocess import (
    PCA_POSITIONS,
    apply_preprocess,
    fit_preprocess,
    identity_preprocess,
)
from .triplets import generate_triplets
from .weights import WeightProblem, solve_weights

log = logging.getLogger(__name__)

ALPHA1_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)

CONFIG_VARIANTS = ("plml", "sml", "cblml")
SPLITS = ("default", "kfold")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; file values < explicit overrides.

    `split="default"` evaluates on the dataset's published train/test
    files; `split="kfold"` pools stratified folds of a single file.
    """

    train_path: Optional[str] = None
    test_path: Optional[str] = None
    data_format: Optional[str] = None    # None infers from the extension
    split: str = "default"
    n_folds: int = 10
    variant: str = "plml"
    m: int = 20
    lambda1: float = 1.0
    lambda2: float = 100.0
    alpha1_grid: Tuple[float, ...] = ALPHA1_GRID
    alpha2: float = 1.0
    k1: int = 3
    k2: int = 3
    knn_k: int = 6
    use_pca: bool = True
    variance_target: float = 0.95
    pca_position: str = "after_norm"
    standardize: bool = True
    normalize: bool = True
    graph_kernel: str = "self_tuning"
    seed: int = 0
    weight_tol: float = 1e-5
    weight_max_iter: int = 1000
    dual_tol: float = 1e-5
    dual_max_iter: int = 1000
    inner_cv_folds: int = 2
    threads: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.variant not in CONFIG_VARIANTS:
            raise ContractError(
                f"variant must be one of {CONFIG_VARIANTS}, got {self.variant!r}"
            )
        if self.split not in SPLITS:
            raise ContractError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.m < 1:
            raise ContractError(f"m must be >= 1, got {self.m}")
        if self.n_folds < 2 or self.inner_cv_folds < 2:
            raise ContractError("fold counts must be >= 2")
        if not self.alpha1_grid:
            raise ContractError("alpha1_grid must not be empty")
        if any(a <= 0 for a in self.alpha1_grid):
            raise ContractError("alpha1 values must be > 0")
        if self.pca_position not in PCA_POSITIONS:
            raise ContractError(
                f"pca_position must be one of {PCA_POSITIONS}, "
                f"got {self.pca_position!r}"
            )
        if self.k1 < 1 or self.k2 < 1 or self.knn_k < 1:
            raise ContractError("k1, k2, and knn_k must be >= 1")
        if self.threads < 1:
            raise ContractError(f"threads must be >= 1, got {self.threads}")
        return self

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        """Read a TOML or JSON config; unknown keys are an error."""
        text = _read_text(path)
        if str(path).endswith(".toml"):
            try:
                import tomllib  # Python >= 3.11
            except ModuleNotFoundError:
                import tomli as tomllib
            try:
                raw = tomllib.loads(text)
            except tomllib.TOMLDecodeError as exc:
                raise DataError(f"{path}: invalid TOML: {exc}") from exc
        else:
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise DataError(f"{path}: config must be a table/object")
        return cls.from_mapping(raw, source=str(path))

    @classmethod
    def from_mapping(cls, raw: dict, source: str = "config") -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ContractError(f"{source}: unknown option(s): {', '.join(unknown)}")
        if "alpha1_grid" in raw and raw["alpha1_grid"] is not None:
            raw = dict(raw)
            raw["alpha1_grid"] = tuple(float(a) for a in raw["alpha1_grid"])
        return cls(**raw).validate()

    def hyperparams(self, alpha1: float, m: Optional[int] = None) -> Hyperparams:
        return Hyperparams(
            m=self.m if m is None else m, lambda1=self.lambda1,
            lambda2=self.lambda2, alpha1=alpha1, alpha2=self.alpha2,
            k1=self.k1, k2=self.k2, knn_k=self.knn_k,
        )


def _read_text(path) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _fit_pre(config: ExperimentConfig, data):
    return fit_preprocess(
        data, use_pca=config.use_pca,
        variance_target=config.variance_target,
        standardize=config.standardize, normalize=config.normalize,
        pca_position=config.pca_position,
    )


@contextmanager
def _stage(name: str, timings: Optional[Dict[str, float]] = None):
    start = time.perf_counter()
    try:
        yield
    except Exception as exc:
        exc.args = (f"[stage: {name}] {exc}",) + exc.args[1:]
        raise
    finally:
        if timings is not None:
            timings[name] = time.perf_counter() - start


def stratified_kfold_indices(y, k: int, seed: int = 0) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Deterministic stratified folds: each class is shuffled once and
    dealt round-robin, so fold class proportions match the data's."""
    y = np.asarray(y, dtype=int)
    if k < 2:
        raise ContractError(f"need at least 2 folds, got {k}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y.shape[0], dtype=int)
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        rng.shuffle(members)
        fold_of[members] = np.arange(members.size) % k
    folds = []
    for f in range(k):
        test = np.flatnonzero(fold_of == f)
        if test.size == 0:
            raise ContractError(
                f"fold {f} is empty; reduce the fold count ({k}) for "
                f"{y.shape[0]} instances"
            )
        train = np.flatnonzero(fold_of != f)
        folds.append((train, test))
    return folds


def stratified_holdout_indices(y, test_fraction: float, seed: int = 0):
    """One stratified train/test split; at least one test row per class."""
    y = np.asarray(y, dtype=int)
    if not 0.0 < test_fraction < 1.0:
        raise ContractError(
            f"test_fraction must be in (0, 1), got {test_fraction}"
        )
    rng = np.random.default_rng(seed)
    test_parts = []
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        rng.shuffle(members)
        take = max(1, int(round(test_fraction * members.size)))
        take = min(take, members.size - 1) if members.size > 1 else take
        test_parts.append(members[:take])
    test = np.sort(np.concatenate(test_parts))
    mask = np.ones(y.shape[0], dtype=bool)
    mask[test] = False
    return np.flatnonzero(mask), test


@dataclass
class TrainResult:
    model: PlmlModel
    alpha1: float
    alpha1_scores: Dict[float, float]
    timings: Dict[str, float]
    trace: Dict[str, List[TraceRow]]


def train_pipeline(
    config: ExperimentConfig,
    dataset: Optional[Dataset] = None,
) -> TrainResult:
    """Train a model per the config; `dataset` overrides `train_path`."""
    config.validate()
    timings: Dict[str, float] = {}
    trace: Dict[str, List[TraceRow]] = {"weights": [], "metrics": []}

    with _stage("load", timings):
        if dataset is None:
            if config.train_path is None:
                raise ContractError("no dataset given and train_path is unset")
            dataset = load_dataset(config.train_path, config.data_format)

    with _stage("preprocess", timings):
        pre = _fit_pre(config, dataset)
        Xp = apply_preprocess(pre, dataset.X)
        ptrain = Dataset(Xp, dataset.y, dataset.label_names)

    m = 1 if config.variant == "sml" else config.m
    with _stage("anchors", timings):
        anchors = kmeans(Xp, m, seed=config.seed)

    if config.variant == "plml":
        with _stage("graph", timings):
            G = build_anchor_distances(anchors.U, Xp)
            lap = build_laplacian(Xp, config.knn_k, kernel=config.graph_kernel)
        with _stage("weights", timings):
            W = solve_weights(
                WeightProblem(
                    X=Xp, U=anchors.U, G=G, L=lap.L,
                    lambda1=config.lambda1, lambda2=config.lambda2,
                ),
                tol=config.weight_tol, max_iter=config.weight_max_iter,
                trace=trace["weights"],
            )
    elif config.variant == "sml":
        W = np.ones((ptrain.n, 1))
    else:  # cblml: hard one-hot anchor assignment
        W = np.zeros((ptrain.n, m))
        W[np.arange(ptrain.n), anchors.assignment] = 1.0

    with _stage("triplets", timings):
        tri = generate_triplets(ptrain, config.k1, config.k2)

    with _stage("alpha1", timings):
        alpha1, scores = _select_alpha1(ptrain, W, anchors, config)

    with _stage("metrics", timings):
        prob = MetricProblem(
            X=Xp, W=W, triplets=tri, alpha1=alpha1, alpha2=config.alpha2,
        )
        basis = solve_basis_metrics(
            prob, tol=config.dual_tol, max_iter=config.dual_max_iter,
            trace=trace["metrics"],
        )

    model = PlmlModel(
        preprocess=pre, anchors=anchors, basis=basis, W=W,
        train_X=Xp, train_y=ptrain.y, label_names=ptrain.label_names,
        variant=config.variant, hyperparams=config.hyperparams(alpha1, m=m),
    )
    log.info(
        "trained %s model: n=%d d=%d m=%d alpha1=%g (stages: %s)",
        config.variant, ptrain.n, ptrain.d, m, alpha1,
        ", ".join(f"{k}={v:.2f}s" for k, v in timings.items()),
    )
    return TrainResult(
        model=model, alpha1=alpha1, alpha1_scores=scores,
        timings=timings, trace=trace,
    )


def _select_alpha1(ptrain, W, anchors, config) -> Tuple[float, Dict[float, float]]:
    """Pick alpha1 by stratified inner CV; ties go to the smallest value.

    The weight matrix does not depend on alpha1, so fold problems reuse
    its rows; triplets are regenerated inside each fold and the prepared
    dual arrays are shared across the grid.
    """
    grid = tuple(sorted(config.alpha1_grid))
    if len(grid) == 1:
        return grid[0], {grid[0]: float("nan")}
    folds = stratified_kfold_indices(
        ptrain.y, config.inner_cv_folds, seed=config.seed,
    )
    hits = {a: 0 for a in grid}
    total = 0
    for tr_idx, va_idx in folds:
        sub = ptrain.subset(tr_idx)
        fold_anchors = AnchorModel(
            U=anchors.U, assignment=anchors.assignment[tr_idx],
        )
        Wtr = W[tr_idx]
        tri = generate_triplets(sub, config.k1, config.k2)
        if tri.count == 0:
            raise ContractError(
                "inner fold produced no constraints; classes are too small"
            )
        base = MetricProblem(
            X=sub.X, W=Wtr, triplets=tri, alpha1=grid[0], alpha2=config.alpha2,
        )
        total += va_idx.size
        for alpha in grid:
            prob = base.with_alpha1(alpha)
            basis = solve_basis_metrics(
                prob, tol=config.dual_tol, max_iter=config.dual_max_iter,
            )
            fold_model = _bare_model(sub, Wtr, fold_anchors, basis, config, alpha)
            pred = predict_batch(
                fold_model, ptrain.X[va_idx], preprocessed=True,
            )
            hits[alpha] += int(np.sum(pred == ptrain.y[va_idx]))
    scores = {a: hits[a] / total for a in grid}
    best = max(grid, key=lambda a: (scores[a], -a))
    log.info(
        "alpha1 selection: %s -> %g",
        {f"{a:g}": round(scores[a], 4) for a in grid}, best,
    )
    return best, scores


def _bare_model(sub, W, anchors, basis, config, alpha1) -> PlmlModel:
    """Model over already-preprocessed data (identity feature pipeline)."""
    return PlmlModel(
        preprocess=identity_preprocess(sub.d), anchors=anchors, basis=basis,
        W=W, train_X=sub.X, train_y=sub.y, label_names=sub.label_names,
        variant=config.variant,
        hyperparams=config.hyperparams(alpha1, m=W.shape[1]),
    )


@dataclass
class CvResult:
    fold_accuracies: List[float]
    pooled_pred: np.ndarray
    truth: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_accuracies))


def cross_validate(
    config: ExperimentConfig, dataset: Optional[Dataset] = None
) -> CvResult:
    """Stratified k-fold over one dataset; each fold retrains everything
    (including the feature pipeline) on its own training part."""
    config.validate()
    if dataset is None:
        path = config.train_path or config.test_path
        if path is None:
            raise ContractError("no dataset given and train_path is unset")
        dataset = load_dataset(path, config.data_format)
    folds = stratified_kfold_indices(dataset.y, config.n_folds, config.seed)

    def run_fold(pair):
        tr_idx, te_idx = pair
        result = train_pipeline(config, dataset.subset(tr_idx))
        pred = predict_batch(result.model, dataset.X[te_idx])
        return pred

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            preds = list(pool.map(run_fold, folds))
    else:
        preds = [run_fold(pair) for pair in folds]

    pooled = np.empty(dataset.n, dtype=int)
    fold_acc = []
    for (tr_idx, te_idx), pred in zip(folds, preds):
        pooled[te_idx] = pred
        fold_acc.append(accuracy(pred, dataset.y[te_idx]))
    return CvResult(fold_accuracies=fold_acc, pooled_pred=pooled, truth=dataset.y)


def evaluate_split(
    config: ExperimentConfig,
    train: Optional[Dataset] = None,
    test: Optional[Dataset] = None,
) -> Tuple[PlmlModel, np.ndarray, Dataset, float]:
    """Train on the train part, predict the test part.

    Returns (model, predictions, test_dataset, accuracy). Label tables
    are aligned by name so a test file with a class order of its own
    still scores correctly.
    """
    config.validate()
    if train is None:
        if config.train_path is None:
            raise ContractError("train dataset/path is required")
        train = load_dataset(config.train_path, config.data_format)
    if test is None:
        if config.test_path is None:
            raise ContractError("test dataset/path is required")
        test = load_dataset(config.test_path, config.data_format)
    result = train_pipeline(config, train)
    pred = predict_batch(result.model, test.X)
    truth = align_labels(test, result.model.label_names)
    return result.model, pred, test, accuracy(pred, truth)


def align_labels(dataset: Dataset, names: tuple) -> np.ndarray:
    """Dataset labels re-encoded against a model's label table."""
    index = {name: k + 1 for k, name in enumerate(names)}
    try:
        return np.array(
            [index[dataset.label_names[v - 1]] for v in dataset.y], dtype=int
        )
    except KeyError as exc:
        raise DataError(f"test data contains unknown class {exc}") from exc


def compare_methods(
    config: ExperimentConfig,
    methods: Sequence[str] = ("plml", "sml", "cblml", "euclidean"),
    train: Optional[Dataset] = None,
    test: Optional[Dataset] = None,
    alpha: float = 0.05,
) -> ComparisonReport:
    """Train every method on identical data and compare them pairwise.

    With split="default" methods share one train/test split; with
    split="kfold" each method's pooled fold predictions are compared.
    "euclidean" is the plain 1-NN baseline in the preprocessed space.
    """
    config.validate()
    for name in methods:
        if name not in CONFIG_VARIANTS + ("euclidean",):
            raise ContractError(f"unknown method {name!r}")
    if len(set(methods)) != len(methods):
        raise ContractError("methods must be unique")

    predictions: Dict[str, np.ndarray] = {}
    if config.split == "default":
        if train is None:
            train = load_dataset(_need(config.train_path, "train_path"),
                                 config.data_format)
        if test is None:
            test = load_dataset(_need(config.test_path, "test_path"),
                                config.data_format)
        truth = None
        for name in methods:
            if name == "euclidean":
                pre = _fit_pre(config, train)
                ptrain = Dataset(
                    apply_preprocess(pre, train.X), train.y, train.label_names
                )
                predictions[name] = euclidean_1nn_predict(
                    ptrain, apply_preprocess(pre, test.X)
                )
                truth_names = train.label_names
            else:
                model, pred, _, _ = evaluate_split(
                    replace(config, variant=name), train, test
                )
                predictions[name] = pred
                truth_names = model.label_names
            truth = align_labels(test, truth_names)
    else:
        if train is None:
            train = load_dataset(
                _need(config.train_path, "train_path"), config.data_format
            )
        truth = train.y
        for name in methods:
            if name == "euclidean":
                predictions[name] = _euclidean_cv(config, train)
            else:
                cv = cross_validate(replace(config, variant=name), train)
                predictions[name] = cv.pooled_pred
    return build_report(predictions, truth, alpha=alpha)


def _euclidean_cv(config, dataset) -> np.ndarray:
    pooled = np.empty(dataset.n, dtype=int)
    for tr_idx, te_idx in stratified_kfold_indices(
        dataset.y, config.n_folds, config.seed
    ):
        sub = dataset.subset(tr_idx)
        pre = _fit_pre(config, sub)
        ptrain = Dataset(apply_preprocess(pre, sub.X), sub.y, sub.label_names)
        pooled[te_idx] = euclidean_1nn_predict(
            ptrain, apply_preprocess(pre, dataset.X[te_idx])
        )
    return pooled


def sensitivity_sweep(
    config: ExperimentConfig,
    m_values: Sequence[int],
    variants: Sequence[str] = ("plml", "cblml"),
    train: Optional[Dataset] = None,
    test: Optional[Dataset] = None,
) -> List[dict]:
    """Accuracy as a function of the anchor count, per variant.

    Returns one row dict per (m, variant). Rows arrive in deterministic
    (m, variant) order regardless of the thread count.
    """
    config.validate()
    if not m_values:
        raise ContractError("m_values must not be empty")
    for name in variants:
        if name not in CONFIG_VARIANTS:
            raise ContractError(f"unknown variant {name!r}")

    jobs = [
        replace(config, m=int(mv), variant=name)
        for mv in m_values for name in variants
    ]

    def run(job_config: ExperimentConfig) -> dict:
        if job_config.split == "default":
            _, _, _, acc = evaluate_split(job_config, train, test)
        else:
            acc = cross_validate(job_config, train).mean
        return {
            "m": job_config.m, "variant": job_config.variant,
            "accuracy": acc,
        }

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def _need(value, name: str):
    if value is None:
        raise ContractError(f"{name} is required for this operation")
    return value
