"""Core types and distance arithmetic against naive quadratic-form oracles."""

import numpy as np
import pytest

from conftest import random_psd, random_simplex_rows
from plml.core import (
    Dataset,
    check_basis,
    check_metric,
    check_weight_rows,
    combine_metric,
    local_distance_sq,
    mahalanobis_sq,
)
from plml.errors import ContractError


def quad_form_oracle(M, a, b):
    """Triple-loop (a-b)^T M (a-b); deliberately index-by-index."""
    d = len(a)
    diff = [a[i] - b[i] for i in range(d)]
    total = 0.0
    for i in range(d):
        for j in range(d):
            total += diff[i] * M[i][j] * diff[j]
    return total


def combine_oracle(weights, basis):
    out = np.zeros_like(basis[0])
    for w, M in zip(weights, basis):
        out = out + w * M
    return out


# ---------------------------------------------------------------- mahalanobis


def test_mahalanobis_euclidean_case():
    assert mahalanobis_sq(np.eye(2), [0.0, 0.0], [3.0, 4.0]) == pytest.approx(25.0)


def test_mahalanobis_zero_matrix():
    assert mahalanobis_sq(np.zeros((2, 2)), [1.0, 2.0], [-3.0, 0.5]) == 0.0


def test_mahalanobis_diag_hand_case():
    # (1,0) under diag(2,1): 2*1^2 + 1*0^2
    got = mahalanobis_sq(np.diag([2.0, 1.0]), [1.0, 0.0], [0.0, 0.0])
    assert got == pytest.approx(2.0)
    assert got == pytest.approx(
        quad_form_oracle(np.diag([2.0, 1.0]), [1.0, 0.0], [0.0, 0.0])
    )


def test_mahalanobis_matches_oracle_random():
    rng = np.random.default_rng(0)
    for _ in range(50):
        d = int(rng.integers(1, 6))
        M = random_psd(rng, d)
        a = rng.standard_normal(d)
        b = rng.standard_normal(d)
        assert mahalanobis_sq(M, a, b) == pytest.approx(
            quad_form_oracle(M, a, b), rel=1e-9, abs=1e-12
        )


def test_mahalanobis_nonnegative_and_clamped():
    rng = np.random.default_rng(1)
    for _ in range(200):
        d = int(rng.integers(1, 5))
        M = random_psd(rng, d)
        a = rng.standard_normal(d) * 1e-6
        b = a + rng.standard_normal(d) * 1e-9
        assert mahalanobis_sq(M, a, b) >= 0.0


def test_mahalanobis_dimension_mismatch():
    with pytest.raises(ContractError):
        mahalanobis_sq(np.eye(2), [1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
    with pytest.raises(ContractError):
        mahalanobis_sq(np.eye(3), [1.0, 2.0], [0.0, 0.0])


# ---------------------------------------------------------- local distances


def test_local_distance_single_identity_is_euclidean():
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal(4), rng.standard_normal(4)
    got = local_distance_sq(np.array([1.0]), np.eye(4)[None], a, b)
    assert got == pytest.approx(float(np.sum((a - b) ** 2)))


def test_local_distance_linearity_hand_case():
    basis = np.stack([np.eye(2), 2.0 * np.eye(2)])
    got = local_distance_sq(np.array([0.3, 0.7]), basis, [1.0, 0.0], [0.0, 0.0])
    assert got == pytest.approx(1.7)


def test_local_distance_combined_oracle_case():
    basis = np.stack([np.diag([4.0, 0.0]), np.diag([0.0, 4.0])])
    w = np.array([0.5, 0.5])
    a, b = np.array([1.0, 1.0]), np.zeros(2)
    assert local_distance_sq(w, basis, a, b) == pytest.approx(4.0)
    M = combine_oracle(w, basis)
    assert local_distance_sq(w, basis, a, b) == pytest.approx(
        quad_form_oracle(M, a, b)
    )


def test_local_distance_symmetric_in_points_for_fixed_metric():
    rng = np.random.default_rng(3)
    for _ in range(30):
        m, d = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        basis = np.stack([random_psd(rng, d) for _ in range(m)])
        w = random_simplex_rows(rng, 1, m)[0]
        a, b = rng.standard_normal(d), rng.standard_normal(d)
        assert local_distance_sq(w, basis, a, b) == pytest.approx(
            local_distance_sq(w, basis, b, a), rel=1e-12, abs=1e-15
        )


def test_local_distance_linear_in_weights_vs_combined_path():
    rng = np.random.default_rng(4)
    for _ in range(30):
        m, d = int(rng.integers(2, 5)), int(rng.integers(1, 5))
        basis = np.stack([random_psd(rng, d) for _ in range(m)])
        w = random_simplex_rows(rng, 1, m)[0]
        a, b = rng.standard_normal(d), rng.standard_normal(d)
        direct = local_distance_sq(w, basis, a, b)
        per_basis = sum(
            w[k] * mahalanobis_sq(basis[k], a, b) for k in range(m)
        )
        combined = mahalanobis_sq(combine_metric(w, basis), a, b)
        assert direct == pytest.approx(per_basis, rel=1e-9)
        assert direct == pytest.approx(combined, rel=1e-9, abs=1e-12)


# ----------------------------------------------------------------- combining


def test_combine_vertex_returns_basis_element():
    rng = np.random.default_rng(5)
    A, B = random_psd(rng, 3), random_psd(rng, 3)
    got = combine_metric(np.array([1.0, 0.0]), np.stack([A, B]))
    np.testing.assert_allclose(got, A)


def test_combine_identical_basis_is_identity():
    got = combine_metric(np.array([0.5, 0.5]), np.stack([np.eye(2), np.eye(2)]))
    np.testing.assert_allclose(got, np.eye(2))


def test_combine_diag_hand_case():
    basis = np.stack([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    got = combine_metric(np.array([0.25, 0.75]), basis)
    np.testing.assert_allclose(got, np.diag([0.25, 0.75]))
    np.testing.assert_allclose(got, combine_oracle([0.25, 0.75], basis))


def test_combine_stays_psd():
    rng = np.random.default_rng(6)
    for _ in range(40):
        m, d = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        basis = np.stack([random_psd(rng, d) for _ in range(m)])
        w = random_simplex_rows(rng, 1, m)[0]
        M = combine_metric(w, basis)
        assert np.min(np.linalg.eigvalsh(M)) >= -1e-10
        np.testing.assert_allclose(M, M.T, atol=1e-12)


# ---------------------------------------------------------------- validators


def test_check_metric_rejects_asymmetry_and_negative():
    with pytest.raises(ContractError):
        check_metric(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ContractError):
        check_metric(np.diag([1.0, -1.0]))
    check_metric(np.diag([1.0, 0.0]))  # boundary PSD passes


def test_check_metric_rejects_nonfinite_and_nonsquare():
    with pytest.raises(ContractError):
        check_metric(np.array([[1.0, 0.0], [0.0, np.nan]]))
    with pytest.raises(ContractError):
        check_metric(np.ones((2, 3)))


def test_check_basis_dimension_agreement():
    good = np.stack([np.eye(2), 2.0 * np.eye(2)])
    check_basis(good)
    with pytest.raises(ContractError):
        check_basis([np.eye(2), np.eye(3)])


def test_check_weight_rows():
    check_weight_rows(np.array([[0.5, 0.5], [1.0, 0.0]]))
    with pytest.raises(ContractError):
        check_weight_rows(np.array([[0.7, 0.7]]))  # sums to 1.4
    with pytest.raises(ContractError):
        check_weight_rows(np.array([[1.5, -0.5]]))  # negative entry


# -------------------------------------------------------------------- dataset


def test_dataset_labels_relabeled_to_contiguous():
    ds = Dataset.from_arrays(np.zeros((4, 2)), ["b", "a", "b", "c"])
    assert sorted(set(ds.y.tolist())) == [1, 2, 3]
    assert ds.n_classes == 3
    assert ds.label_names == ("a", "b", "c")
    assert ds.y.tolist() == [2, 1, 2, 3]


def test_dataset_numeric_labels_sorted_numerically():
    ds = Dataset.from_arrays(np.zeros((3, 1)), [10, 2, 10])
    assert ds.label_names == ("2", "10")
    assert ds.y.tolist() == [2, 1, 2]


def test_dataset_rejects_nonfinite_and_empty():
    with pytest.raises(ContractError):
        Dataset.from_arrays(np.array([[np.inf, 0.0]]), [1])
    with pytest.raises(ContractError):
        Dataset.from_arrays(np.zeros((0, 2)), [])


def test_dataset_subset_keeps_label_table():
    ds = Dataset.from_arrays(np.arange(8.0).reshape(4, 2), ["a", "b", "a", "b"])
    sub = ds.subset([0, 2])
    assert sub.label_names == ds.label_names
    assert sub.y.tolist() == [1, 1]
    assert sub.n == 2
