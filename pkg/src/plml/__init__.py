"""Local metric learning with anchor basis metrics and smooth weights.

Each instance's Mahalanobis metric is a simplex-weighted combination of
a small set of basis metrics attached to anchor points. Weights are
learned first (reconstruction + graph smoothness on the simplex), then
the basis metrics (large-margin triplet objective via a box-constrained
smooth dual). Classification is 1-NN under the query's local metric.
"""

from .anchors import AnchorModel, LaplacianGraph, build_anchor_distances, build_laplacian, kmeans
from .core import (
    Dataset,
    check_basis,
    check_metric,
    check_weight_rows,
    combine_metric,
    local_distance_sq,
    mahalanobis_sq,
)
from .datasets import load_dataset, make_blobs, make_pinwheel, save_dataset
from .ellipses import (
    EllipseSpec,
    ellipse_boundary_points,
    export_ellipses,
    metric_ellipse,
    model_ellipses,
)
from .errors import ContractError, DataError, PlmlError, SolverError
from .evaluation import (
    ComparisonReport,
    McNemarResult,
    accuracy,
    build_report,
    mcnemar_test,
    ranking_points,
)
from .fista import FistaResult, FistaState, TraceRow, fista
from .metrics import (
    MetricProblem,
    assemble_K,
    box_project,
    dual_gradient,
    dual_objective,
    psd_project,
    recover_metrics,
    solve_basis_metrics,
)
from .model_io import load_model, save_model
from .pipeline import (
    ExperimentConfig,
    TrainResult,
    compare_methods,
    cross_validate,
    evaluate_split,
    sensitivity_sweep,
    stratified_kfold_indices,
    train_pipeline,
)
from .predictor import (
    Hyperparams,
    PlmlModel,
    leave_one_out_accuracy,
    predict,
    predict_batch,
    query_weights,
)
from .preprocess import PreprocessModel, apply_preprocess, fit_preprocess, identity_preprocess
from .triplets import TripletSet, generate_triplets
from .weights import (
    WeightProblem,
    assign_test_weights,
    project_simplex_rows,
    solve_weights,
    weight_gradient,
    weight_objective,
    weighting_error_terms,
)

__version__ = "0.1.0"
