"""The acceptance gate: one test per numbered criterion.

Each test checks its criterion at the stated tolerance and prints one
verdict line (shown with ``pytest -rA`` or ``-s``). Benchmark-scale
criteria skip with instructions when the UCI files are absent; the full
anchor-count sweep additionally hides behind PLML_NIGHTLY=1 and is
represented in regular runs by its fast blob-based gate.
"""

import os
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from conftest import (
    plain_projected_gradient,
    random_labeled,
    random_simplex_rows,
    require_dataset,
    simplex_project_oracle,
)
from plml.anchors import (
    AnchorModel,
    build_anchor_distances,
    build_laplacian,
    kmeans,
)
from plml.core import Dataset, combine_metric, mahalanobis_sq
from plml.datasets import load_dataset, make_blobs, make_pinwheel
from plml.ellipses import ellipse_boundary_points, model_ellipses
from plml.metrics import (
    MetricProblem,
    dual_gradient,
    dual_objective,
    psd_project,
    solve_basis_metrics,
)
from plml.neighbors import knn_indices, nearest_index
from plml.pipeline import (
    ExperimentConfig,
    evaluate_split,
    sensitivity_sweep,
    stratified_holdout_indices,
    train_pipeline,
)
from plml.predictor import Hyperparams, PlmlModel, predict_batch
from plml.preprocess import identity_preprocess
from plml.triplets import generate_triplets
from plml.weights import (
    WeightProblem,
    project_simplex_rows,
    solve_weights,
    weight_gradient,
    weight_objective,
)


def report(num, detail):
    print(f"criterion {num}: PASS - {detail}")


def central_fd(fun, x, h=1e-6):
    """Central finite differences of a scalar function, one entry at a time."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros(x.size)
    flat = x.reshape(-1).copy()
    for k in range(flat.size):
        step = np.zeros_like(flat)
        step[k] = h
        hi = fun((flat + step).reshape(x.shape))
        lo = fun((flat - step).reshape(x.shape))
        grad[k] = (hi - lo) / (2.0 * h)
    return grad.reshape(x.shape)


def rel_error(got, want):
    return float(
        np.linalg.norm(np.ravel(got) - np.ravel(want))
        / max(1e-12, np.linalg.norm(np.ravel(want)))
    )


# --- 1: projection oracles ---


def test_criterion_1_projection_oracles():
    rng = np.random.default_rng(1001)
    worst = 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 9))
        v = rng.uniform(-3.0, 3.0, size=m) * float(rng.choice([0.1, 1.0, 10.0]))
        got = project_simplex_rows(v[None, :])[0]
        worst = max(worst, float(np.max(np.abs(got - simplex_project_oracle(v)))))
    assert worst <= 1e-8

    for _ in range(60):
        d = int(rng.integers(1, 5))
        A = rng.standard_normal((d, d))
        K = 0.5 * (A + A.T)
        P = psd_project(K)
        assert float(np.linalg.eigvalsh(P).min()) >= -1e-10
        dist = float(np.linalg.norm(K - P))
        for _ in range(20):
            B = rng.standard_normal((d, d))
            S = (B @ B.T) * float(rng.choice([0.1, 1.0, 3.0]))
            assert float(np.linalg.norm(K - S)) >= dist - 1e-9
    report(1, f"simplex max deviation {worst:.2e}; psd output closest in 1200 samples")


# --- 2: gradients against finite differences ---


def test_criterion_2_gradient_checks():
    rng = np.random.default_rng(1002)
    worst_w = 0.0
    for _ in range(20):
        n = int(rng.integers(4, 13))
        d = int(rng.integers(1, 4))
        m = int(rng.integers(1, 3))
        X = rng.standard_normal((n, d))
        U = rng.standard_normal((m, d))
        prob = WeightProblem(
            X=X, U=U, G=build_anchor_distances(U, X),
            L=build_laplacian(X, min(3, n - 1)).L, lambda1=0.7, lambda2=2.5,
        )
        W = random_simplex_rows(rng, n, m)
        fd = central_fd(lambda Z: weight_objective(prob, Z), W)
        worst_w = max(worst_w, rel_error(weight_gradient(prob, W), fd))
    assert worst_w < 1e-5

    worst_d = 0.0
    trials = 0
    while trials < 20:
        n = int(rng.integers(6, 13))
        d = int(rng.integers(1, 4))
        m = int(rng.integers(1, 3))
        ds = random_labeled(rng, n, d, 2)
        ts = generate_triplets(ds, k1=1, k2=1)
        if ts.count == 0:
            continue
        trials += 1
        prob = MetricProblem(
            X=ds.X, W=random_simplex_rows(rng, n, m), triplets=ts,
            alpha1=float(rng.uniform(0.5, 2.0)), alpha2=1.0,
        )
        gamma = rng.uniform(0.1, 0.9, ts.count)
        fd = central_fd(lambda g: dual_objective(prob, g), gamma)
        worst_d = max(worst_d, rel_error(dual_gradient(prob, gamma), fd))
    assert worst_d < 1e-4
    report(2, f"worst relative error {worst_w:.2e} (weights), {worst_d:.2e} (dual)")


# --- 3: solver contracts ---


def test_criterion_3_solver_contracts():
    rng = np.random.default_rng(1003)
    gaps = []
    for n, d, m in ((25, 3, 4), (40, 5, 8)):
        X = rng.standard_normal((n, d))
        U = kmeans(X, m, seed=0).U
        lap = build_laplacian(X, 4)
        prob = WeightProblem(
            X=X, U=U, G=build_anchor_distances(U, X), L=lap.L,
            lambda1=1.0, lambda2=10.0,
        )
        trace = []
        solve_weights(prob, trace=trace)
        assert trace[-1].residual <= 1e-5
        # tighter run so the oracle gap measures solution quality, not the
        # stopping tolerance
        W = solve_weights(prob, tol=1e-7, max_iter=5000)
        lip = 2.0 * (
            np.linalg.norm(U @ U.T, 2)
            + prob.lambda2 * float(np.linalg.eigvalsh(lap.L.toarray()).max())
        )
        _, slow_best = plain_projected_gradient(
            np.full((n, m), 1.0 / m),
            lambda Z: (weight_objective(prob, Z), weight_gradient(prob, Z)),
            project_simplex_rows, 1.0 / lip, 50_000,
        )
        fast = weight_objective(prob, W)
        assert fast <= slow_best + 1e-6
        gaps.append(fast - slow_best)

    ds = random_labeled(rng, 30, 3, 3)
    ts = generate_triplets(ds, k1=2, k2=2)
    prob = MetricProblem(
        X=ds.X, W=random_simplex_rows(rng, 30, 4), triplets=ts,
        alpha1=1.0, alpha2=1.0,
    )
    basis, gamma = solve_basis_metrics(prob, return_gamma=True)
    min_eig = min(float(np.linalg.eigvalsh(M).min()) for M in basis)
    assert min_eig >= -1e-10
    start = dual_objective(prob, np.zeros(ts.count))
    final = dual_objective(prob, gamma)
    assert final <= start + 1e-12
    report(3, f"objective gaps to 50k-step oracle {max(gaps):.2e}; "
              f"min basis eigenvalue {min_eig:.2e}; dual {start:.3g} -> {final:.3g}")


# --- 4: invariant suites ---


def test_criterion_4_invariant_suites():
    rng = np.random.default_rng(1004)

    X = rng.standard_normal((20, 3))
    U = rng.standard_normal((5, 3))
    prob = WeightProblem(
        X=X, U=U, G=build_anchor_distances(U, X), L=build_laplacian(X, 3).L,
    )
    iterates = {"w": 0, "g": 0}

    def check_simplex(state):
        iterates["w"] += 1
        assert float(state.x.min()) >= -1e-12
        np.testing.assert_allclose(state.x.sum(axis=1), 1.0, atol=1e-9)

    solve_weights(prob, callback=check_simplex)
    assert iterates["w"] > 0

    ds = random_labeled(rng, 16, 2, 2)
    ts = generate_triplets(ds, k1=2, k2=2)
    mp = MetricProblem(
        X=ds.X, W=random_simplex_rows(rng, 16, 2), triplets=ts, alpha1=0.5,
    )

    def check_box(state):
        iterates["g"] += 1
        assert float(state.x.min()) >= 0.0
        assert float(state.x.max()) <= 1.0

    solve_basis_metrics(mp, callback=check_box)
    assert iterates["g"] > 0

    for _ in range(5):
        Z = rng.standard_normal((int(rng.integers(8, 40)), int(rng.integers(1, 5))))
        lap = build_laplacian(Z, 3).L.toarray()
        assert float(np.max(np.abs(lap.sum(axis=1)))) <= 1e-9
        assert float(np.linalg.eigvalsh(0.5 * (lap + lap.T)).min()) >= -1e-9

    train = random_labeled(rng, 40, 4, 3)
    model = PlmlModel(
        preprocess=identity_preprocess(4),
        anchors=AnchorModel(U=np.zeros((1, 4)), assignment=np.zeros(40, int)),
        basis=np.eye(4)[None, :, :], W=np.ones((40, 1)),
        train_X=train.X, train_y=train.y, label_names=train.label_names,
        variant="sml", hyperparams=Hyperparams(m=1),
    )
    queries = rng.standard_normal((25, 4))
    assert np.array_equal(
        predict_batch(model, queries),
        train.y[nearest_index(queries, train.X)],
    )
    report(4, f"{iterates['w']} weight iterates on the simplex, "
              f"{iterates['g']} dual iterates in the box; Laplacian and "
              f"identity-basis reductions hold")


# --- 5 and 6: benchmark accuracies (need the UCI files) ---


def test_criterion_5_pendigits_default_split():
    tra, tes = require_dataset("pendigits.tra", "pendigits.tes")
    train, test = load_dataset(tra), load_dataset(tes)
    cfg = ExperimentConfig(
        variant="plml", m=20, lambda1=1.0, lambda2=100.0, alpha2=1.0, seed=0,
    )
    _, _, _, acc_plml = evaluate_split(cfg, train, test)
    _, _, _, acc_cblml = evaluate_split(replace(cfg, variant="cblml"), train, test)
    assert acc_plml >= 0.970
    assert acc_plml >= acc_cblml
    report(5, f"pendigits plml {100 * acc_plml:.2f}% >= 97.0 "
              f"and >= cblml {100 * acc_cblml:.2f}%")


def test_criterion_6_optdigits_default_split():
    tra, tes = require_dataset("optdigits.tra", "optdigits.tes")
    train, test = load_dataset(tra), load_dataset(tes)
    cfg = ExperimentConfig(
        variant="plml", m=20, lambda1=1.0, lambda2=100.0, alpha2=1.0, seed=0,
    )
    _, _, _, acc = evaluate_split(cfg, train, test)
    assert acc >= 0.965
    report(6, f"optdigits plml {100 * acc:.2f}% >= 96.5")


# --- 7: rotating boundaries, PLML above both ablations ---


@pytest.fixture(scope="module")
def pinwheel_study():
    """Ten seeds of the rotating-boundary set, three variants each."""
    accs = {"plml": [], "cblml": [], "sml": []}
    first_model = None
    for seed in range(10):
        data = make_pinwheel(600, n_classes=3, seed=seed)
        tr, te = stratified_holdout_indices(data.y, 0.5, seed=seed)
        for variant in accs:
            cfg = ExperimentConfig(
                variant=variant, m=20, use_pca=False, normalize=False,
                alpha1_grid=(1.0,), seed=seed,
            )
            result = train_pipeline(cfg, dataset=data.subset(tr))
            pred = predict_batch(result.model, data.X[te])
            accs[variant].append(float(np.mean(pred == data.y[te])))
            if variant == "plml" and first_model is None:
                first_model = result.model
    return accs, first_model


def one_sided_sign_test(diffs):
    wins = int(np.sum(diffs > 0))
    losses = int(np.sum(diffs < 0))
    if wins + losses == 0:
        return 1.0
    return float(
        stats.binomtest(wins, wins + losses, 0.5, alternative="greater").pvalue
    )


def test_criterion_7_rotating_boundary_ordering(pinwheel_study):
    accs, _ = pinwheel_study
    mean = {v: float(np.mean(a)) for v, a in accs.items()}
    pvals = {}
    for opponent in ("cblml", "sml"):
        assert mean["plml"] >= mean[opponent]
        diffs = np.array(accs["plml"]) - np.array(accs[opponent])
        pvals[opponent] = one_sided_sign_test(diffs)
        assert pvals[opponent] < 0.1
    report(7, f"means plml {mean['plml']:.4f} >= cblml {mean['cblml']:.4f} "
              f"(p={pvals['cblml']:.4g}) and >= sml {mean['sml']:.4f} "
              f"(p={pvals['sml']:.4g}) over 10 seeds")


# --- 8: anchor-count sweep trend ---


def test_criterion_8_fast_gate_blob_sweep():
    data = make_blobs(300, n_classes=3, d=2, seed=1)
    tr, te = stratified_holdout_indices(data.y, 0.5, seed=1)
    cfg = ExperimentConfig(
        variant="plml", use_pca=False, normalize=False,
        alpha1_grid=(1.0,), seed=1,
    )
    rows = sensitivity_sweep(
        cfg, m_values=(5, 40), variants=("plml",),
        train=data.subset(tr), test=data.subset(te),
    )
    acc = {row["m"]: row["accuracy"] for row in rows}
    assert acc[40] >= acc[5] - 0.02
    report(8, f"fast gate: plml m=40 {acc[40]:.4f} >= m=5 {acc[5]:.4f} - 0.02")


def test_criterion_8_pendigits_sweep_nightly():
    if not os.environ.get("PLML_NIGHTLY"):
        pytest.skip(
            "full anchor-count sweep takes hours; set PLML_NIGHTLY=1 "
            "(and provide the pendigits files) to run it"
        )
    tra, tes = require_dataset("pendigits.tra", "pendigits.tes")
    train, test = load_dataset(tra), load_dataset(tes)
    cfg = ExperimentConfig(
        variant="plml", lambda1=1.0, lambda2=100.0, alpha2=1.0, seed=0,
    )
    rows = sensitivity_sweep(
        cfg, m_values=(5, 10, 15, 20, 25, 30, 35, 40),
        variants=("plml", "cblml"), train=train, test=test,
    )
    plml = {r["m"]: r["accuracy"] for r in rows if r["variant"] == "plml"}
    cblml = {r["m"]: r["accuracy"] for r in rows if r["variant"] == "cblml"}
    assert plml[40] >= max(plml.values()) - 0.005
    assert cblml[40] < max(cblml.values())
    report(8, f"nightly: plml m=40 {plml[40]:.4f} within 0.005 of max "
              f"{max(plml.values()):.4f}; cblml m=40 {cblml[40]:.4f} below "
              f"its max {max(cblml.values()):.4f}")


# --- 9: ellipse validity and smoothness of neighboring metrics ---


def principal_axes(model):
    axes = np.empty((model.n, 2))
    for i in range(model.n):
        M = combine_metric(model.W[i], model.basis)
        axes[i] = np.linalg.eigh(M)[1][:, -1]
    return axes


def test_criterion_9_ellipses_and_smoothness(pinwheel_study):
    sk_datasets = pytest.importorskip(
        "sklearn.datasets", reason="the digit subset comes from scikit-learn"
    )
    digits = sk_datasets.load_digits()
    keep = np.isin(digits.target, (0, 1, 2, 3))
    X = digits.data[keep] - digits.data[keep].mean(axis=0)
    _, _, Vt = np.linalg.svd(X, full_matrices=False)
    data = Dataset.from_arrays(X @ Vt[:2].T, digits.target[keep])

    cfg = ExperimentConfig(
        variant="plml", m=20, use_pca=False, normalize=False,
        alpha1_grid=(1.0,), seed=0,
    )
    model = train_pipeline(cfg, dataset=data).model
    specs = model_ellipses(model, range(model.n))
    degenerate = sum(spec.degenerate for spec in specs)
    assert degenerate <= len(specs) // 2  # the check below must not be vacuous
    worst = 0.0
    for spec in specs:
        if spec.degenerate:
            continue
        M = combine_metric(model.W[spec.instance], model.basis)
        for z in ellipse_boundary_points(spec, 32):
            worst = max(worst, abs(mahalanobis_sq(M, z, spec.center) - 1.0))
    assert worst <= 1e-6

    _, pin_model = pinwheel_study
    axes = principal_axes(pin_model)
    nbrs, _ = knn_indices(pin_model.train_X, 6)
    cosines = np.empty(pin_model.n)
    for i in range(pin_model.n):
        v = axes[i]
        neighbor_axes = axes[nbrs[i]]
        signs = np.where(neighbor_axes @ v >= 0.0, 1.0, -1.0)
        avg = (signs[:, None] * neighbor_axes).mean(axis=0)
        cosines[i] = abs(v @ avg) / np.linalg.norm(avg)
    mean_cos = float(cosines.mean())
    assert mean_cos >= 0.9
    report(9, f"{len(specs) - degenerate}/{len(specs)} drawable ellipses, "
              f"worst boundary residual {worst:.2e}; neighbor-axis cosine "
              f"{mean_cos:.4f} >= 0.9")
