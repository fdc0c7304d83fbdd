"""Tests for indicator matrices, the objective, hill climbing and the threshold search."""

from itertools import product
from unittest.mock import Mock

import numpy as np
import pytest

from qspectral.core.classical import Partition
from qspectral.core.cluster_opt import (
    ClimbConfig,
    IndicatorMatrix,
    binary_search_threshold,
    build_indicator,
    estimate_expectation,
    extract_partition,
    hill_climb,
    objective,
    quantum_counter,
    search_threshold,
    spectrum_counter,
)
from qspectral.core.qsim import DensityMatrix, RegisterLayout
from qspectral.errors import ConfigError, EmptyClusterError, UnreachableTargetError


def _component_rho(sizes):
    """(1/k) * projector onto the normalized indicators of consecutive blocks."""
    n, k = sum(sizes), len(sizes)
    x = build_indicator(Partition.from_labels(np.repeat(np.arange(k), sizes))).x
    return DensityMatrix(x @ x.T / k), n


def _random_rho(n, rank, seed):
    a = np.random.default_rng(seed).normal(size=(n, rank))
    rho = a @ a.T
    return DensityMatrix(rho / np.trace(rho))


def _brute_force_best(rho, k):
    """max over all surjective labelings of sum_j (1/s_j) * sum_{a,b in C_j} rho_ab."""
    labels = np.array(list(product(range(k), repeat=rho.n)))
    onehot = (labels[:, :, None] == np.arange(k)).astype(float)
    sizes = onehot.sum(axis=1)
    onto = (sizes > 0).all(axis=1)
    within = np.einsum("mak,ab,mbk->mk", onehot[onto], rho.real(), onehot[onto])
    return float((within / sizes[onto]).sum(axis=1).max())


class TestIndicator:
    def test_identity_for_singletons(self):
        np.testing.assert_array_equal(build_indicator(Partition((0, 1), 2)).x, np.eye(2))

    def test_four_points(self):
        x = build_indicator(Partition((0, 0, 1, 1), 2)).x
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(x, [[s, 0], [s, 0], [0, s], [0, s]])

    def test_orthonormal_columns(self):
        labels = np.random.default_rng(0).integers(3, size=30)
        labels[:3] = [0, 1, 2]
        indicator = build_indicator(Partition.from_labels(labels, 3))
        np.testing.assert_allclose(indicator.x.T @ indicator.x, np.eye(3), atol=1e-12)
        assert sum(indicator.sizes) == 30

    def test_extract_round_trip(self):
        partition = Partition((2, 0, 1, 1, 0), 3)
        assert extract_partition(build_indicator(partition)) == partition

    def test_rejects_empty_cluster(self):
        with pytest.raises(EmptyClusterError):
            IndicatorMatrix(np.eye(2), (1, 0))

    def test_rejects_multiple_memberships(self):
        with pytest.raises(ConfigError, match="exactly one nonzero"):
            IndicatorMatrix(np.ones((2, 2)), (1, 1))

    @pytest.mark.parametrize(
        "x",
        [
            [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            [[0.5, 0.0], [0.5, 0.0], [0.0, 1.0]],
        ],
    )
    def test_rejects_unnormalized_entries(self, x):
        with pytest.raises(ConfigError, match="orthonormal"):
            IndicatorMatrix(np.array(x), (2, 1))


class TestObjective:
    @pytest.mark.parametrize("k", [1, 2, 4])
    def test_maximally_mixed(self, k):
        labels = np.arange(16) % k
        indicator = build_indicator(Partition.from_labels(labels, k))
        assert objective(DensityMatrix(np.eye(16) / 16), indicator) == pytest.approx(k / 16)

    def test_components_reach_one(self):
        rho, _ = _component_rho([3, 5])
        indicator = build_indicator(Partition.from_labels([0] * 3 + [1] * 5))
        assert objective(rho, indicator) == pytest.approx(1.0)

    def test_matches_eigenvector_average(self):
        q, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(10, 3)))
        rho = DensityMatrix(q @ q.T / 3)
        labels = [0, 1, 2] + list(np.random.default_rng(2).integers(3, size=7))
        indicator = build_indicator(Partition.from_labels(labels, 3))
        x = indicator.x
        expected = sum(q[:, i] @ x @ x.T @ q[:, i] for i in range(3)) / 3
        assert objective(rho, indicator) == pytest.approx(expected)

    def test_bounded_by_one(self):
        rho = _random_rho(12, 3, seed=4)
        for seed in range(5):
            labels = np.random.default_rng(seed).integers(3, size=12)
            labels[:3] = [0, 1, 2]
            value = objective(rho, build_indicator(Partition.from_labels(labels, 3)))
            assert 0 <= value <= 1 + 1e-12

    def test_size_mismatch(self):
        with pytest.raises(ConfigError, match="rows"):
            objective(DensityMatrix(np.eye(4) / 4), build_indicator(Partition((0, 1), 2)))


class TestEstimateExpectation:
    def test_certain_outcome(self):
        rho, _ = _component_rho([2, 2])
        indicator = build_indicator(Partition((0, 0, 1, 1), 2))
        assert estimate_expectation(rho, indicator, 50, seed=0) == 1.0

    def test_single_shot(self):
        indicator = build_indicator(Partition((0, 1, 0, 1), 2))
        assert estimate_expectation(DensityMatrix(np.eye(4) / 4), indicator, 1, seed=3) in (0.0, 1.0)

    def test_concentration(self):
        rho = _random_rho(8, 2, seed=5)
        indicator = build_indicator(Partition((0, 0, 0, 0, 1, 1, 1, 1), 2))
        p = objective(rho, indicator)
        n_m = 4000
        for seed in range(10):
            estimate = estimate_expectation(rho, indicator, n_m, seed=seed)
            assert abs(estimate - p) <= 4 * np.sqrt(p * (1 - p) / n_m)

    def test_rejects_zero_shots(self):
        with pytest.raises(ConfigError, match="n_M"):
            estimate_expectation(DensityMatrix(np.eye(2) / 2), build_indicator(Partition((0, 1), 2)), 0, seed=0)


class TestHillClimb:
    def test_recovers_components(self):
        rho, _ = _component_rho([4, 4])
        result = hill_climb(rho, 2, ClimbConfig(restarts=10, seed=0))
        assert result.partition.labels == (0, 0, 0, 0, 1, 1, 1, 1)
        assert result.value == pytest.approx(1.0)

    def test_three_components(self):
        rho, _ = _component_rho([6, 2, 8])
        result = hill_climb(rho, 3, ClimbConfig(restarts=20, seed=1))
        assert result.value == pytest.approx(1.0)
        assert result.partition.labels == tuple([0] * 6 + [1] * 2 + [2] * 8)

    def test_matches_brute_force(self):
        hits = 0
        for trial in range(50):
            rho = _random_rho(8, 2, seed=trial)
            best = _brute_force_best(rho, 2)
            result = hill_climb(rho, 2, ClimbConfig(restarts=10, seed=trial))
            assert result.value <= best + 1e-12
            hits += result.value >= best - 1e-9
        assert hits >= 45

    def test_matches_brute_force_three_clusters(self):
        hits = 0
        for trial, n in enumerate([9] * 10 + [10] * 10):
            rho = _random_rho(n, 3, seed=100 + trial)
            best = _brute_force_best(rho, 3)
            result = hill_climb(rho, 3, ClimbConfig(restarts=20, seed=trial))
            assert result.value <= best + 1e-12
            hits += result.value >= best - 1e-9
        assert hits >= 18

    def test_single_cluster(self):
        rho, n = _component_rho([4, 4])
        result = hill_climb(rho, 1)
        assert result.partition.labels == (0,) * n
        assert result.value == pytest.approx(0.5)

    def test_trace_is_monotone(self):
        rho = _random_rho(10, 3, seed=7)
        trace = []
        result = hill_climb(rho, 3, ClimbConfig(restarts=3, seed=2), trace=trace)
        assert trace
        assert set(trace[0]) == {"restart", "iteration", "move", "value"}
        for restart in range(3):
            values = [rec["value"] for rec in trace if rec["restart"] == restart]
            assert all(b > a for a, b in zip(values, values[1:]))
        assert max(rec["value"] for rec in trace) <= result.value + 1e-12

    def test_deterministic(self):
        rho = _random_rho(10, 2, seed=8)
        cfg = ClimbConfig(restarts=4, seed=3)
        assert hill_climb(rho, 2, cfg).partition == hill_climb(rho, 2, cfg).partition

    def test_no_iterations(self):
        trace = []
        result = hill_climb(_random_rho(6, 2, seed=0), 2, ClimbConfig(restarts=2, max_iters=0), trace=trace)
        assert trace == []
        assert sorted(set(result.partition.labels)) == [0, 1]

    def test_shot_estimates(self):
        rho, _ = _component_rho([4, 4])
        result = hill_climb(rho, 2, ClimbConfig(restarts=10, seed=1, shots=2000))
        assert result.partition.labels == (0, 0, 0, 0, 1, 1, 1, 1)
        assert result.value == pytest.approx(1.0)

    def test_rejects_k_above_n(self):
        with pytest.raises(ConfigError, match="k must satisfy"):
            hill_climb(DensityMatrix(np.eye(2) / 2), 3)

    def test_rejects_bad_config(self):
        with pytest.raises(ConfigError, match="restarts"):
            ClimbConfig(restarts=0)


class TestThresholdSearch:
    # rescaled eigenvalues: 0 (x3), 1/4 (x6), 1/2 (x7)
    BLOCKS = ["K8", "K4", "K4"]

    def test_finds_intermediate_count(self, block_laplacian):
        counting = spectrum_counter(block_laplacian(self.BLOCKS))
        state = search_threshold(counting, 9, 0.01, 1.0, 2**-10)
        assert counting(state.result) == 9
        assert 0.25 < state.result <= 0.5
        assert [c for _, c in state.history][-1] == 9

    def test_finds_three_components(self, block_laplacian):
        counting = Mock(side_effect=spectrum_counter(block_laplacian(self.BLOCKS, seed=4)))
        state = search_threshold(counting, 3, 0.0, 1.0, 2**-10)
        assert 0 < state.result <= 0.25
        assert spectrum_counter(block_laplacian(self.BLOCKS))(state.result) == 3
        assert [c for _, c in state.history][:2] == [16, 0]
        assert counting.call_count == len(state.history) <= state.max_probes

    def test_endpoint_hi(self, block_laplacian):
        counting = spectrum_counter(block_laplacian(self.BLOCKS))
        state = search_threshold(counting, 16, 0.01, 1.0, 2**-10)
        assert state.result == 1.0
        assert state.history == [(1.0, 16)]

    def test_endpoint_lo(self, block_laplacian):
        counting = spectrum_counter(block_laplacian(self.BLOCKS))
        assert binary_search_threshold(counting, 3, 0.01, 1.0, 2**-10) == 0.01

    def test_gap_in_counts(self, block_laplacian):
        counting = spectrum_counter(block_laplacian(self.BLOCKS))
        with pytest.raises(UnreachableTargetError) as exc:
            search_threshold(counting, 5, 0.01, 1.0, 2**-10)
        assert exc.value.count_lo < 5 < exc.value.count_hi

    def test_target_outside_range(self, block_laplacian):
        counting = spectrum_counter(block_laplacian(self.BLOCKS))
        with pytest.raises(UnreachableTargetError, match="unreachable"):
            search_threshold(counting, 2, 0.01, 1.0, 2**-10)

    def test_counting_call_budget(self):
        counting = Mock(side_effect=lambda threshold: 0 if threshold < 0.3 else 2)
        with pytest.raises(UnreachableTargetError):
            search_threshold(counting, 1, 0.0, 1.0, 2**-6)
        # endpoints count against ceil(log2(1 / 2**-6)) = 6
        assert counting.call_count == 6
        assert [call.args[0] for call in counting.call_args_list[:2]] == [1.0, 0.0]

    def test_tiny_interval_counts_hi_only(self):
        counting = Mock(return_value=0)
        with pytest.raises(UnreachableTargetError) as exc:
            search_threshold(counting, 1, 0.5, 0.6, 0.2)
        assert counting.call_count == 1
        assert exc.value.count_lo is None

    def test_rejects_bad_interval(self):
        with pytest.raises(ConfigError, match="lo < hi"):
            search_threshold(lambda _: 0, 1, 0.5, 0.5, 0.1)


class TestCounters:
    def test_quantum_matches_spectrum(self, block_laplacian):
        lap = block_laplacian(["K8", "K4", "K2", "K2"], seed=6)
        quantum = quantum_counter(lap, RegisterLayout.for_points(16, t=4))
        classical = spectrum_counter(lap)
        for threshold in (1 / 32, 0.15):
            assert quantum(threshold) == classical(threshold)

    def test_ambiguous_count_reports_n(self, block_laplacian):
        quantum = quantum_counter(block_laplacian(["K8", "K4", "K2", "K2"]), RegisterLayout.for_points(16, t=4))
        assert quantum(1.0) == 16

    def test_search_with_quantum_counter(self, block_laplacian):
        lap = block_laplacian(["K8", "K4", "K2", "K2"], seed=9)
        quantum = quantum_counter(lap, RegisterLayout.for_points(16, t=4))
        state = search_threshold(quantum, 6, 1 / 16, 1.0, 1 / 64)
        assert spectrum_counter(lap)(state.result) == 6
        assert len(state.history) <= state.max_probes
