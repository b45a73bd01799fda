"""Metric ellipse geometry and the CSV/SVG exports."""

import numpy as np
import pytest

from plml.core import combine_metric, mahalanobis_sq
from plml.ellipses import (
    ellipse_boundary_points,
    export_ellipses,
    metric_ellipse,
    model_ellipses,
    write_ellipse_csv,
    write_ellipse_svg,
)
from plml.errors import ContractError
from plml.predictor import PlmlModel, Hyperparams
from plml.preprocess import identity_preprocess
from plml.anchors import AnchorModel


def quad_values(spec, M, count=64):
    pts = ellipse_boundary_points(spec, count)
    return np.array([mahalanobis_sq(M, z, spec.center) for z in pts])


def test_identity_metric_is_unit_circle():
    spec = metric_ellipse(np.eye(2), np.array([1.0, -2.0]))
    assert not spec.degenerate
    assert spec.lengths == pytest.approx([1.0, 1.0])
    assert spec.eigenvalues == pytest.approx([1.0, 1.0])
    pts = ellipse_boundary_points(spec, 32)
    radii = np.linalg.norm(pts - spec.center, axis=1)
    assert radii == pytest.approx(np.ones(32))


def test_axis_aligned_metric():
    spec = metric_ellipse(np.diag([4.0, 1.0]), np.zeros(2))
    # the smaller eigenvalue owns the longer (major) axis
    assert spec.lengths == pytest.approx([1.0, 0.5])
    assert spec.eigenvalues == pytest.approx([1.0, 4.0])
    assert np.abs(spec.axes[:, 0]) == pytest.approx([0.0, 1.0])
    assert np.abs(spec.axes[:, 1]) == pytest.approx([1.0, 0.0])


def test_boundary_points_satisfy_unit_equation():
    rng = np.random.default_rng(31)
    for _ in range(20):
        A = rng.standard_normal((2, 2))
        M = A @ A.T + 0.1 * np.eye(2)
        center = rng.standard_normal(2)
        spec = metric_ellipse(M, center)
        assert quad_values(spec, M) == pytest.approx(np.ones(64), abs=1e-6)


def test_degenerate_metric_flagged():
    spec = metric_ellipse(np.diag([1.0, 1e-13]), np.zeros(2))
    assert spec.degenerate
    assert spec.lengths[0] == np.inf      # unbounded major axis
    assert spec.lengths[1] == pytest.approx(1.0)
    with pytest.raises(ContractError, match="degenerate"):
        ellipse_boundary_points(spec)


def test_metric_ellipse_validation():
    with pytest.raises(ContractError, match="2, 2"):
        metric_ellipse(np.eye(3), np.zeros(3))
    with pytest.raises(ContractError):
        metric_ellipse(np.eye(2), np.zeros(3))


# --- model-level export ---


def test_model_ellipses_match_combined_metrics(toy_model):
    idx = [0, 3, 11]
    specs = model_ellipses(toy_model, idx)
    assert len(specs) == 3
    for i, spec in zip(idx, specs):
        assert spec.instance == i
        assert spec.label == int(toy_model.train_y[i])
        assert np.array_equal(spec.center, toy_model.train_X[i])
        M = combine_metric(toy_model.W[i], toy_model.basis)
        if not spec.degenerate:
            assert quad_values(spec, M) == pytest.approx(np.ones(64),
                                                         abs=1e-6)


def test_model_ellipses_index_range(toy_model):
    with pytest.raises(ContractError, match="out of range"):
        model_ellipses(toy_model, [toy_model.n])


def test_model_ellipses_need_two_dims():
    rng = np.random.default_rng(0)
    n, d = 6, 3
    model = PlmlModel(
        preprocess=identity_preprocess(d),
        anchors=AnchorModel(U=np.zeros((1, d)), assignment=np.zeros(n, int)),
        basis=np.eye(d)[None, :, :],
        W=np.ones((n, 1)),
        train_X=rng.standard_normal((n, d)),
        train_y=np.ones(n, dtype=int),
        label_names=("a",),
        variant="sml",
        hyperparams=Hyperparams(m=1),
    )
    with pytest.raises(ContractError, match="2-D"):
        model_ellipses(model, [0])


# --- file formats ---


def specs_pair():
    return [
        metric_ellipse(np.eye(2), np.array([0.0, 0.0]), label=1, instance=0),
        metric_ellipse(np.diag([4.0, 1.0]), np.array([2.0, 1.0]), label=2,
                       instance=5),
    ]


def test_csv_content(tmp_path):
    p = tmp_path / "ellipses.csv"
    write_ellipse_csv(specs_pair(), p)
    lines = p.read_text().strip().split("\n")
    assert lines[0].startswith("instance,label,center_x,center_y,major_len")
    assert len(lines) == 3
    fields = lines[2].split(",")
    assert fields[0] == "5" and fields[1] == "2"
    assert float(fields[2]) == 2.0 and float(fields[3]) == 1.0
    assert float(fields[4]) == 1.0 and float(fields[5]) == 0.5
    assert fields[-1] == "0"


def test_csv_marks_degenerate(tmp_path):
    spec = metric_ellipse(np.diag([1.0, 0.0]), np.zeros(2), label=1)
    p = tmp_path / "deg.csv"
    write_ellipse_csv([spec], p)
    assert p.read_text().strip().split("\n")[1].endswith(",1")


def test_svg_content(tmp_path):
    p = tmp_path / "ellipses.svg"
    write_ellipse_svg(specs_pair(), p)
    text = p.read_text()
    assert text.startswith('<svg xmlns="http://www.w3.org/2000/svg"')
    assert text.count("<ellipse") == 2
    assert text.count("<circle") == 2
    assert "#0072b2" in text       # class 1 color
    assert "stroke-dasharray" not in text


def test_svg_degenerate_dashed(tmp_path):
    spec = metric_ellipse(np.diag([1.0, 0.0]), np.zeros(2))
    p = tmp_path / "deg.svg"
    write_ellipse_svg([spec], p)
    assert "stroke-dasharray" in p.read_text()


def test_svg_needs_specs(tmp_path):
    with pytest.raises(ContractError, match="no ellipses"):
        write_ellipse_svg([], tmp_path / "empty.svg")


def test_export_picks_format(tmp_path, toy_model):
    csv_path = tmp_path / "out.csv"
    specs = export_ellipses(toy_model, [0, 1], csv_path)
    assert csv_path.exists() and len(specs) == 2
    svg_path = tmp_path / "out.svg"
    export_ellipses(toy_model, [0, 1], svg_path)
    assert svg_path.exists()
    both = tmp_path / "out_both"
    export_ellipses(toy_model, [0, 1], both)
    assert (tmp_path / "out_both.csv").exists()
    assert (tmp_path / "out_both.svg").exists()
