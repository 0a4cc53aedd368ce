import numpy as np
import pytest

from recovgraph.core.errors import NumericalError
from recovgraph.services import correlation, ingest, synth


def test_equicorrelated_partial_is_one_third():
    pearson = synth.equicorrelation(3, 0.5)

    theta, ridge = correlation.precision_matrix(pearson)
    partial = correlation.partial_correlation(theta)

    assert ridge == 0.0
    off_diagonal = partial[~np.eye(3, dtype=bool)]
    np.testing.assert_allclose(off_diagonal, 1 / 3, atol=1e-12)
    np.testing.assert_array_equal(np.diag(partial), 1.0)


def test_partial_from_synthetic_data():
    spec = synth.SynthSpec(n_joints=3, n_frames=10_000, seed=5, rho=0.5)
    series = ingest.prepare_session(synth.generate_session(spec, 1))

    structure = correlation.correlation_structure(series)

    off_diagonal = structure.partial[~np.eye(3, dtype=bool)]
    assert np.all(np.abs(off_diagonal - 1 / 3) < 0.05)


def test_pearson_is_symmetric_unit_diagonal():
    series = ingest.standardize(np.random.default_rng(1).normal(size=(40, 5)))

    pearson = correlation.pearson_matrix(series)

    np.testing.assert_array_equal(pearson, pearson.T)
    np.testing.assert_array_equal(np.diag(pearson), 1.0)
    assert np.all(np.abs(pearson) <= 1.0)


def test_singular_matrix_gets_smallest_working_ridge(caplog):
    # two identical columns make the sample correlation exactly singular
    pearson = np.array([[1.0, 1.0, 0.2], [1.0, 1.0, 0.2], [0.2, 0.2, 1.0]])

    with caplog.at_level("WARNING"):
        theta, ridge = correlation.precision_matrix(pearson, ridge_ladder=[1e-10, 1e-8, 1e-6, 1e-4], cond_limit=1e12)

    assert ridge > 0
    assert ridge in (1e-10, 1e-8, 1e-6, 1e-4)
    shifted = pearson + ridge * np.eye(3)
    np.testing.assert_allclose(theta @ shifted, np.eye(3), atol=1e-6)
    assert "ridge" in caplog.text


def test_ladder_exhausted_raises():
    pearson = np.array([[1.0, 1.0], [1.0, 1.0]])

    with pytest.raises(NumericalError):
        correlation.precision_matrix(pearson, ridge_ladder=[1e-14], cond_limit=1e12)


def test_non_positive_precision_diagonal_raises():
    with pytest.raises(NumericalError):
        correlation.partial_correlation(np.array([[1.0, 0.1], [0.1, -1.0]]))


def test_pearson_worked_example():
    series = ingest.standardize(np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 5.0]]))

    pearson = correlation.pearson_matrix(series)

    assert pearson[0, 1] == pytest.approx(0.9829, abs=5e-4)
    assert pearson[0, 1] == pytest.approx(6.5 / np.sqrt(5.0 * 8.75), abs=1e-12)


def test_negated_column_is_perfectly_anticorrelated():
    column = np.random.default_rng(2).normal(size=30)
    series = ingest.standardize(np.column_stack([column, -column]))

    assert correlation.pearson_matrix(series)[0, 1] == pytest.approx(-1.0, abs=1e-12)


def test_identity_inverts_to_identity():
    theta, ridge = correlation.precision_matrix(np.eye(4))

    assert ridge == 0.0
    np.testing.assert_allclose(theta, np.eye(4), atol=1e-12)


def test_two_by_two_closed_form_inverse():
    rho = 0.6
    theta, ridge = correlation.precision_matrix(np.array([[1.0, rho], [rho, 1.0]]))

    expected = np.array([[1.0, -rho], [-rho, 1.0]]) / (1 - rho**2)
    assert ridge == 0.0
    np.testing.assert_allclose(theta, expected, atol=1e-12)


@pytest.mark.parametrize("rho", [-0.8, -0.3, 0.0, 0.45, 0.95])
def test_two_node_partial_equals_correlation(rho):
    theta, _ = correlation.precision_matrix(np.array([[1.0, rho], [rho, 1.0]]))

    partial = correlation.partial_correlation(theta)

    assert partial[0, 1] == pytest.approx(rho, abs=1e-12)
    assert partial[1, 0] == partial[0, 1]


def test_two_joint_series_partial_equals_pearson():
    series = ingest.standardize(np.random.default_rng(5).normal(size=(80, 2)) @ np.array([[1.0, 0.7], [0.0, 0.7]]))

    structure = correlation.correlation_structure(series)

    assert structure.partial[0, 1] == pytest.approx(structure.pearson[0, 1], abs=1e-12)


def test_diagonal_precision_gives_identity_partial():
    partial = correlation.partial_correlation(np.diag([2.0, 0.5, 3.0]))

    np.testing.assert_array_equal(partial, np.eye(3))


def test_pearson_permutation_equivariant():
    norms = np.random.default_rng(6).normal(size=(60, 5))
    order = [3, 0, 4, 1, 2]

    pearson = correlation.pearson_matrix(ingest.standardize(norms))
    permuted = correlation.pearson_matrix(ingest.standardize(norms[:, order]))

    np.testing.assert_allclose(permuted, pearson[np.ix_(order, order)], atol=1e-12)


def test_precision_inverts_pearson_within_tolerance():
    series = ingest.standardize(np.random.default_rng(4).normal(size=(200, 6)))
    pearson = correlation.pearson_matrix(series)

    theta, ridge = correlation.precision_matrix(pearson)

    assert ridge == 0.0
    np.testing.assert_allclose(theta @ pearson, np.eye(6), atol=1e-6)
