"""Tests for the classical oracles."""

from itertools import product

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from qspectral.core.classical import (
    Partition,
    _lloyd,
    canonical_labels,
    classical_spectral_cluster,
    eigen_decompose,
    fix_signs,
    kmeans,
    read_partition,
    smallest_k_eigenpairs,
    within_ssq,
    write_partition,
)
from qspectral.core.data_graph import build_knn_graph, build_laplacian, connected_components, generate_dataset
from qspectral.errors import ConfigError, ConvergenceError, DataError, EmptyClusterError, NotSymmetricError

TWO_NODE = np.array([[1.0, -1.0], [-1.0, 1.0]])


def _random_psd(n, seed):
    b = np.random.default_rng(seed).normal(size=(n, n))
    return b @ b.T


class TestEigenDecompose:
    def test_two_node(self):
        spectrum = eigen_decompose(TWO_NODE)
        np.testing.assert_allclose(spectrum.eigenvalues, [0, 2], atol=1e-12)

    def test_zero_matrix(self):
        spectrum = eigen_decompose(np.zeros((4, 4)))
        np.testing.assert_array_equal(spectrum.eigenvalues, np.zeros(4))
        np.testing.assert_allclose(spectrum.eigenvectors.T @ spectrum.eigenvectors, np.eye(4), atol=1e-10)

    def test_reconstruction_and_orthonormality(self):
        a = _random_psd(12, 0)
        spectrum = eigen_decompose(a)
        u, lam = spectrum.eigenvectors, spectrum.eigenvalues
        assert np.all(np.diff(lam) >= 0)
        np.testing.assert_allclose(u.T @ u, np.eye(12), atol=1e-10)
        assert np.max(np.abs(a - u @ np.diag(lam) @ u.T)) <= 1e-8 * np.max(np.abs(a))

    def test_sign_convention(self):
        u = eigen_decompose(_random_psd(6, 1)).eigenvectors
        for j in range(6):
            first = u[np.flatnonzero(np.abs(u[:, j]) > 1e-12)[0], j]
            assert first > 0

    def test_accepts_laplacian(self, block_laplacian):
        spectrum = eigen_decompose(block_laplacian(["K4", "K4"]))
        np.testing.assert_allclose(spectrum.eigenvalues, [0, 0, 4, 4, 4, 4, 4, 4], atol=1e-10)

    def test_not_symmetric(self):
        with pytest.raises(NotSymmetricError, match="not symmetric"):
            eigen_decompose(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_not_square(self):
        with pytest.raises(ConfigError, match="square"):
            eigen_decompose(np.zeros((2, 3)))

    def test_moons_two_below_threshold(self):
        lap = build_laplacian(build_knn_graph(generate_dataset("moons", 256, seed=7), 8))
        assert eigen_decompose(lap.rescaled_dense()).count_below(2**-9) == 2


class TestFixSigns:
    def test_flips_negative_leading_entry(self):
        v = np.array([[0.0, 1.0], [-1.0, 0.0]])
        np.testing.assert_array_equal(fix_signs(v), [[0.0, 1.0], [1.0, 0.0]])


class TestSmallestKEigenpairs:
    def test_two_node(self):
        spectrum = smallest_k_eigenpairs(TWO_NODE, 1)
        assert abs(spectrum.eigenvalues[0]) <= 1e-8
        np.testing.assert_allclose(spectrum.eigenvectors[:, 0], np.ones(2) / np.sqrt(2), atol=1e-7)

    def test_two_components(self, block_laplacian):
        lap = block_laplacian(["K8", "K8"], seed=2)
        spectrum = smallest_k_eigenpairs(lap, 2)
        np.testing.assert_allclose(spectrum.eigenvalues, [0, 0], atol=1e-8)

    def test_moons_two_zero_eigenvalues(self):
        lap = build_laplacian(build_knn_graph(generate_dataset("moons", 256, seed=7), 8))
        spectrum = smallest_k_eigenpairs(lap, 2)
        np.testing.assert_allclose(spectrum.eigenvalues, [0, 0], atol=1e-8)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_dense_prefix(self, seed):
        a = _random_psd(16, seed)
        fast = smallest_k_eigenpairs(a, 3)
        dense = eigen_decompose(a)
        np.testing.assert_allclose(fast.eigenvalues, dense.eigenvalues[:3], atol=1e-6)
        for j in range(3):
            assert abs(abs(fast.eigenvectors[:, j] @ dense.eigenvectors[:, j]) - 1) < 1e-6
            residual = a @ fast.eigenvectors[:, j] - fast.eigenvalues[j] * fast.eigenvectors[:, j]
            assert np.linalg.norm(residual) <= 1e-7

    def test_iteration_cap(self):
        with pytest.raises(ConvergenceError) as exc:
            smallest_k_eigenpairs(_random_psd(16, 0), 2, max_iters=1, tol=1e-30)
        assert exc.value.residual > 0

    @pytest.mark.parametrize("k", [0, 2])
    def test_rejects_bad_k(self, k):
        with pytest.raises(ConfigError, match="k must satisfy"):
            smallest_k_eigenpairs(TWO_NODE, k)


class TestKmeans:
    def test_separated_groups(self):
        partition = kmeans([0.0, 0.1, 10.0, 10.1], 2, seed=0)
        labels = partition.labels
        assert labels[0] == labels[1] != labels[2] == labels[3]

    def test_deterministic(self):
        rows = np.random.default_rng(3).normal(size=(40, 2))
        assert kmeans(rows, 3, seed=5) == kmeans(rows, 3, seed=5)

    def test_matches_exhaustive_minimum(self):
        rng = np.random.default_rng(4)
        points = np.vstack([rng.normal(0, 1, size=(4, 2)), rng.normal([3, 0], 1, size=(4, 2))])
        best = min(
            within_ssq(points, np.array(assign))
            for assign in product([0, 1], repeat=8)
            if 0 < sum(assign) < 8
        )
        found = kmeans(points, 2, seed=0)
        assert within_ssq(points, found.as_array()) == pytest.approx(best, abs=1e-12)

    def test_ssq_nonincreasing(self):
        rng = np.random.default_rng(6)
        points = rng.normal(size=(60, 2))
        _, history = _lloyd(points, points[:4].copy(), 300)
        assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))

    def test_identical_points_no_empty_cluster(self):
        partition = kmeans(np.zeros((4, 2)), 2, seed=0)
        assert sorted(set(partition.labels)) == [0, 1]

    def test_rejects_k_above_n(self):
        with pytest.raises(ConfigError, match="k-means needs"):
            kmeans(np.zeros((2, 2)), 3, seed=0)

    def test_raw_moons_disagree_with_truth(self):
        data = generate_dataset("moons", 256, seed=7)
        labels = kmeans(data.points, 2, seed=7).labels
        assert adjusted_rand_score(data.truth, labels) < 0.95


class TestClassicalSpectralCluster:
    def test_two_disconnected_pairs(self, block_laplacian):
        lap = block_laplacian(["K2", "K2"])
        labels = classical_spectral_cluster(lap, 2, seed=0).labels
        assert labels[0] == labels[1] != labels[2] == labels[3]

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_random_two_component_graph(self, block_laplacian, seed):
        lap = block_laplacian(["Q3", "K8"], seed=seed)
        labels = classical_spectral_cluster(lap, 2, seed=seed).labels
        raw = lap.raw_dense()
        # nodes joined by an edge share a label
        for i, j in zip(*np.nonzero(np.triu(raw < 0))):
            assert labels[i] == labels[j]
        assert len(set(labels)) == 2

    def test_moons_match_components(self):
        graph = build_knn_graph(generate_dataset("moons", 256, seed=7), 8)
        labels = classical_spectral_cluster(build_laplacian(graph), 2, seed=7).labels
        assert adjusted_rand_score(connected_components(graph)[1], labels) == pytest.approx(1.0)


class TestPartition:
    def test_empty_cluster_rejected(self):
        with pytest.raises(EmptyClusterError):
            Partition((0, 0, 2), 3)

    def test_out_of_range(self):
        with pytest.raises(ConfigError, match="labels must lie"):
            Partition((0, 1, 5), 2)

    def test_canonical_labels(self):
        assert canonical_labels([2, 2, 0, 1, 0]) == [0, 0, 1, 2, 1]

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "labels.csv"
        partition = Partition.from_labels([1, 0, 0, 2])
        write_partition(partition, str(path))
        assert path.read_text() == "1\n0\n0\n2\n"
        assert read_partition(str(path)) == partition

    def test_csv_bad_label(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("0\nx\n")
        with pytest.raises(DataError, match=":2:"):
            read_partition(str(path))
