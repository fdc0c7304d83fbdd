"""Classical oracles: dense eigensolver, inverse power method, Lloyd's k-means, spectral clustering on the smallest eigenvectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import sparse

from qspectral.config import (
    INVERSE_POWER_MAX_ITERS,
    INVERSE_POWER_SHIFT,
    INVERSE_POWER_TOL,
    KMEANS_MAX_ITERS,
    KMEANS_N_INIT,
    SYMMETRY_TOL,
)
from qspectral.core.data_graph import Laplacian
from qspectral.errors import ConfigError, ConvergenceError, DataError, EmptyClusterError, NotSymmetricError
from qspectral.util.log import get_logger

logger = get_logger("classical")


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # column j pairs with eigenvalue j

    def count_below(self, threshold: float) -> int:
        return int(np.count_nonzero(self.eigenvalues < threshold))


@dataclass(frozen=True)
class Partition:
    labels: tuple[int, ...]
    k: int

    def __post_init__(self) -> None:
        present = set(self.labels)
        if any(lab < 0 or lab >= self.k for lab in present):
            raise ConfigError(f"labels must lie in [0, {self.k})")
        missing = sorted(set(range(self.k)) - present)
        if missing:
            raise EmptyClusterError(f"cluster(s) {missing} are empty")

    @classmethod
    def from_labels(cls, labels, k: int | None = None) -> Partition:
        labels = tuple(int(x) for x in labels)
        return cls(labels, max(labels) + 1 if k is None else k)

    @property
    def n(self) -> int:
        return len(self.labels)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=int)


def _as_dense(matrix) -> np.ndarray:
    if isinstance(matrix, Laplacian):
        matrix = matrix.raw
    if sparse.issparse(matrix):
        return matrix.toarray()
    return np.asarray(matrix, dtype=float)


def fix_signs(vectors: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip columns so the first entry with |x| > tol is positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        nz = np.flatnonzero(np.abs(out[:, j]) > tol)
        if nz.size and out[nz[0], j] < 0:
            out[:, j] *= -1
    return out


# ---------------------------------------------------------------------------
# Eigensolvers
# ---------------------------------------------------------------------------


def eigen_decompose(matrix) -> Spectrum:
    """Full symmetric eigendecomposition, ascending."""
    a = _as_dense(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {a.shape}")
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > SYMMETRY_TOL:
        raise NotSymmetricError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    w, v = scipy.linalg.eigh(a)
    return Spectrum(w, fix_signs(v))


def smallest_k_eigenpairs(
    matrix,
    k: int,
    *,
    seed: int = 0,
    tol: float = INVERSE_POWER_TOL,
    max_iters: int = INVERSE_POWER_MAX_ITERS,
) -> Spectrum:
    """k smallest eigenpairs by shifted inverse power iteration with Gram-Schmidt deflation.

    Each pair is found with the fixed shift sigma = (previous eigenvalue, or 0) - 1e-6,
    which sits below every eigenvalue left in the deflated subspace.
    """
    a = _as_dense(matrix)
    n = a.shape[0]
    if not 1 <= k < n:
        raise ConfigError(f"k must satisfy 1 <= k < N = {n}, got {k}")
    rng = np.random.default_rng(seed)
    found_vals: list[float] = []
    found_vecs: list[np.ndarray] = []
    eye = np.eye(n)
    for j in range(k):
        sigma = (found_vals[-1] if found_vals else 0.0) - INVERSE_POWER_SHIFT
        lu = scipy.linalg.lu_factor(a - sigma * eye)
        basis = np.array(found_vecs).T if found_vecs else np.zeros((n, 0))
        x = rng.standard_normal(n)
        lam, residual = 0.0, np.inf
        for it in range(max_iters):
            x = x - basis @ (basis.T @ x)
            x /= np.linalg.norm(x)
            y = scipy.linalg.lu_solve(lu, x)
            y = y - basis @ (basis.T @ y)
            x = y / np.linalg.norm(y)
            ax = a @ x
            lam = float(x @ ax)
            residual = float(np.linalg.norm(ax - lam * x))
            if residual <= tol:
                logger.debug("eigenpair %d converged after %d iterations (lambda=%.3e)", j, it + 1, lam)
                break
        else:
            raise ConvergenceError(f"inverse power iteration did not converge for eigenpair {j}", residual)
        found_vals.append(lam)
        found_vecs.append(x)
    return Spectrum(np.array(found_vals), fix_signs(np.array(found_vecs).T))


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------


def _kmeanspp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    min_sq = np.full(n, np.inf)
    for i in range(1, k):
        min_sq = np.minimum(min_sq, np.sum((points - centers[i - 1]) ** 2, axis=1))
        total = min_sq.sum()
        if total <= 0:
            centers[i] = points[rng.integers(n)]
        else:
            centers[i] = points[rng.choice(n, p=min_sq / total)]
    return centers


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)


def within_ssq(points: np.ndarray, labels: np.ndarray) -> float:
    """Within-cluster sum of squared distances to cluster means."""
    total = 0.0
    for lab in np.unique(labels):
        members = points[labels == lab]
        total += float(np.sum((members - members.mean(axis=0)) ** 2))
    return total


def _lloyd(points: np.ndarray, centers: np.ndarray, max_iters: int) -> tuple[np.ndarray, list[float]]:
    """Lloyd iterations from given centers. Returns labels and the SSQ after each update."""
    k = centers.shape[0]
    labels = np.full(points.shape[0], -1)
    history: list[float] = []
    for _ in range(max_iters):
        dist = _sq_dists(points, centers)
        new_labels = np.argmin(dist, axis=1)
        counts = np.bincount(new_labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            # Re-seed at the point farthest from its assigned centroid
            far = int(np.argmax(dist[np.arange(len(points)), new_labels]))
            new_labels[far] = empty
            dist[far] = np.inf
            dist[far, empty] = 0.0
            counts = np.bincount(new_labels, minlength=k)
        for j in range(k):
            centers[j] = points[new_labels == j].mean(axis=0)
        history.append(within_ssq(points, new_labels))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, history


def kmeans(rows, k: int, seed: int, *, n_init: int = KMEANS_N_INIT, max_iters: int = KMEANS_MAX_ITERS) -> Partition:
    """Lloyd's algorithm from k-means++ seeding; best SSQ over n_init seeded runs."""
    points = np.asarray(rows, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if k < 1 or n < k:
        raise ConfigError(f"k-means needs 1 <= k <= N, got k={k}, N={n}")
    rng = np.random.default_rng(seed)
    best_labels, best_ssq = None, np.inf
    for _ in range(max(1, n_init)):
        labels, history = _lloyd(points, _kmeanspp(points, k, rng), max_iters)
        if history[-1] < best_ssq - 1e-12:
            best_labels, best_ssq = labels, history[-1]
    return Partition.from_labels(canonical_labels(best_labels), k)


def canonical_labels(labels) -> list[int]:
    """Relabel so clusters are numbered in order of first appearance."""
    mapping: dict[int, int] = {}
    return [mapping.setdefault(int(lab), len(mapping)) for lab in labels]


# ---------------------------------------------------------------------------
# Spectral clustering
# ---------------------------------------------------------------------------


def classical_spectral_cluster(laplacian, k: int, seed: int) -> Partition:
    """Cluster rows of [u_0 .. u_{k-1}] with k-means."""
    spectrum = eigen_decompose(laplacian)
    a = spectrum.eigenvectors[:, :k]
    return kmeans(a, k, seed)


# ---------------------------------------------------------------------------
# Partition CSV (one label per line)
# ---------------------------------------------------------------------------


def write_partition(partition: Partition, path: str) -> None:
    with open(path, "w") as f:
        f.write("".join(f"{lab}\n" for lab in partition.labels))


def read_partition(path: str, k: int | None = None) -> Partition:
    labels = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                labels.append(int(line))
            except ValueError as e:
                raise DataError(f"{path}:{lineno}: label {line!r} is not an integer") from e
    if not labels:
        raise DataError(f"{path}: no labels found")
    return Partition.from_labels(labels, k)
