"""Pytest configuration and shared fixtures."""

from argparse import Namespace
from itertools import combinations

import numpy as np
import pytest

from qspectral.core.data_graph import SimilarityGraph, build_laplacian


def _block_edges(kind: str) -> tuple[int, list[tuple[int, int]]]:
    if kind == "K1":
        return 1, []
    if kind.startswith("K"):
        m = int(kind[1:])
        return m, list(combinations(range(m), 2))
    if kind.startswith("Q"):
        dim = int(kind[1:])
        return 2**dim, [(i, i ^ (1 << b)) for i in range(2**dim) for b in range(dim) if i < i ^ (1 << b)]
    raise ValueError(kind)


@pytest.fixture
def block_laplacian():
    """Factory: Laplacian of a disjoint union of K_m / hypercube Q_m blocks, nodes optionally shuffled.

    With d = 8 every rescaled eigenvalue of K_m (m <= 8) or Q_m (m <= 7) is a
    multiple of 1/16, so phase estimation on t >= 4 bits is exact.
    """

    def _create(blocks, d=8, seed=None):
        edges, offset = [], 0
        for kind in blocks:
            size, block = _block_edges(kind)
            edges += [(i + offset, j + offset) for i, j in block]
            offset += size
        perm = np.arange(offset) if seed is None else np.random.default_rng(seed).permutation(offset)
        graph = SimilarityGraph.from_edges(offset, [(int(perm[i]), int(perm[j])) for i, j in edges], d)
        return build_laplacian(graph)

    return _create


@pytest.fixture
def isolated_config(tmp_path, monkeypatch):
    """Point the user config at an empty temp dir and clear the qubit-cap env var."""
    config_dir = tmp_path / "config"
    config_dir.mkdir()
    monkeypatch.setattr("qspectral.config.CONFIG_DIR", str(config_dir))
    monkeypatch.setattr("qspectral.config.CONFIG_FILE", str(config_dir / "config.json"))
    monkeypatch.delenv("QSPECTRAL_QUBIT_CAP", raising=False)
    return config_dir


@pytest.fixture
def mock_args(isolated_config):
    """Factory fixture for creating argparse Namespace objects with defaults."""

    def _create(**overrides):
        defaults = {
            "json": False,
            "kind": "moons",
            "data_path": None,
            "n": 16,
            "seed": 7,
            "d": 8,
            "lambda_exp": 9,
            "backend": "ideal",
            "t": None,
            "t_prime": None,
            "epsilon0": 0.1,
            "qubit_cap": None,
            "shots": 100,
            "restarts": 3,
            "n_m": None,
            "out": None,
            "format": None,
            "labels_out": None,
            "trace": None,
            "histogram": 0,
            "dump_state": None,
            "target_k": None,
            "method": "classical_spectral",
            "sizes": "16",
        }
        defaults.update(overrides)
        return Namespace(**defaults)

    return _create
