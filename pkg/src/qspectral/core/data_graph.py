"""Datasets, mutual nearest-neighbor graphs and their Laplacians.

The bundled generators lay every cluster out as a jittered lattice band
(curved for moons and rings, rectangular for blobs). All lattice edges survive
the mutual (d-1)-NN rule for d = 8, so each cluster stays connected and its
algebraic connectivity is bounded below by that of the lattice itself.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components as _cc
from scipy.spatial.distance import cdist

from qspectral.config import DATASET_KINDS, PAD_OFFSET, is_power_of_two
from qspectral.errors import ConfigError, DataError
from qspectral.util.log import get_logger

logger = get_logger("data")

# Declared bounding boxes, rows = (lower, upper), columns = coordinates
BBOXES: dict[str, tuple[tuple[float, float], tuple[float, float]]] = {
    "moons": ((-1.0, -0.5), (2.0, 1.0)),
    "blobs": ((-6.0, -2.0), (8.0, 6.0)),
    "rings": ((-1.0, -1.0), (1.0, 1.0)),
}

_DEFAULT_PARAMS: dict[str, dict] = {
    "moons": {"jitter": 0.03, "gap": 3.5},
    "blobs": {"centers": 3, "jitter": 0.1, "gap": 4.0},
    "rings": {"rings": 2, "jitter": 0.03, "gap": 3.0},
}


@dataclass(frozen=True, eq=False)
class Dataset:
    points: np.ndarray  # (N, M)
    seed: int
    kind: str
    bbox: np.ndarray  # (2, M)
    meta: dict = field(default_factory=dict)

    @property
    def n_points(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def original_n(self) -> int:
        return int(self.meta.get("original_n", self.n_points))

    @property
    def truth(self) -> list[int] | None:
        return self.meta.get("truth")


@dataclass(frozen=True)
class SimilarityGraph:
    n_nodes: int
    edges: frozenset[tuple[int, int]]
    d: int

    def __post_init__(self) -> None:
        deg = np.zeros(self.n_nodes, dtype=int)
        for i, j in self.edges:
            if i == j or not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
                raise ConfigError(f"invalid edge ({i}, {j}) for {self.n_nodes} nodes")
            deg[i] += 1
            deg[j] += 1
        if self.n_nodes and deg.max() > self.d - 1:
            raise ConfigError(f"node degree {deg.max()} exceeds d - 1 = {self.d - 1}")

    @classmethod
    def from_edges(cls, n_nodes: int, edges, d: int) -> SimilarityGraph:
        """Build from any iterable of pairs; pairs are normalized to i < j."""
        return cls(n_nodes, frozenset((min(i, j), max(i, j)) for i, j in edges), d)

    def adjacency(self) -> sparse.csr_matrix:
        if not self.edges:
            return sparse.csr_matrix((self.n_nodes, self.n_nodes))
        e = np.array(sorted(self.edges), dtype=int)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(rows.size)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.n_nodes, self.n_nodes))

    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency().sum(axis=1)).ravel().astype(int)


@dataclass(frozen=True, eq=False)
class Laplacian:
    raw: sparse.csr_matrix
    rescaled: sparse.csr_matrix
    d: int

    @property
    def n(self) -> int:
        return int(self.raw.shape[0])

    def raw_dense(self) -> np.ndarray:
        return self.raw.toarray()

    def rescaled_dense(self) -> np.ndarray:
        return self.rescaled.toarray()


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _lattice(m: int, aspect: float) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Column-major (col, row) integer coordinates for m points, about `aspect` columns per row."""
    rows = max(1, round(math.sqrt(m / aspect)))
    cols = math.ceil(m / rows)
    idx = np.arange(m)
    return idx // rows, idx % rows, rows, cols


def _arc_band(m: int) -> tuple[np.ndarray, float, float]:
    """Lattice band bent around the origin, opening downward.

    Returns (points, boundary ray angle, mid radius). Spacing is 1 along both
    lattice directions at the mid radius.
    """
    col, row, rows, cols = _lattice(m, 2.0)
    radius = float(max(rows - 1, 1))
    inner = radius - (rows - 1) / 2
    span = min((cols - 1) / radius, 0.9 * math.pi)
    step = span / (cols - 1) if cols > 1 else 0.0
    alpha = min(math.pi / 2 - span / 2, math.pi / 2 - 0.1)
    angle = math.pi / 2 - span / 2 + col * step
    r = inner + row
    return np.column_stack([r * np.cos(angle), r * np.sin(angle)]), alpha, radius


def _moons(n_points: int, rng: np.random.Generator, params: dict) -> tuple[np.ndarray, np.ndarray]:
    upper, alpha, radius = _arc_band(n_points // 2)
    slope = math.tan(alpha)
    # The second band is the point reflection of the first. Its apex sits so the
    # two bounding wedges are parallel-offset by `gap`, tips reaching into each
    # other's concavity.
    x2 = 2 * radius * math.cos(alpha)
    y2 = slope * x2 - params["gap"] * math.sqrt(1 + slope * slope)
    lower = np.array([x2, y2]) - upper
    points = np.vstack([upper, lower])
    truth = np.repeat([0, 1], [len(upper), len(lower)])
    return points + rng.normal(scale=params["jitter"], size=points.shape), truth


def _split_sizes(n: int, parts: int) -> list[int]:
    base, extra = divmod(n, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def _blobs(n_points: int, rng: np.random.Generator, params: dict) -> tuple[np.ndarray, np.ndarray]:
    centers = int(params["centers"])
    if not 1 <= centers <= n_points:
        raise ConfigError(f"blobs needs 1 <= centers <= n_points, got {centers}")
    gap = float(params["gap"])
    per_line = math.ceil(math.sqrt(centers))
    grids = []
    for size in _split_sizes(n_points, centers):
        col, row, rows, cols = _lattice(size, 1.0)
        grids.append((np.column_stack([col, row]).astype(float), cols - 1, rows - 1))

    chunks, labels = [], []
    y_offset = 0.0
    for start in range(0, centers, per_line):
        line = grids[start : start + per_line]
        line_width = sum(w for _, w, _ in line) + gap * (len(line) - 1)
        x_offset = -line_width / 2
        for j, (pts, w, _) in enumerate(line):
            chunks.append(pts + np.array([x_offset, y_offset]))
            labels.append(np.full(len(pts), start + j))
            x_offset += w + gap
        y_offset += max(h for _, _, h in line) + gap
    points = np.vstack(chunks)
    return points + rng.normal(scale=params["jitter"], size=points.shape), np.concatenate(labels)


def _rings(n_points: int, rng: np.random.Generator, params: dict) -> tuple[np.ndarray, np.ndarray]:
    n_rings = int(params["rings"])
    chunks, labels = [], []
    base = 0.0
    for j, size in enumerate(_split_sizes(n_points, n_rings)):
        rows = 2 if size >= 8 else 1
        cols = math.ceil(size / rows)
        idx = np.arange(size)
        col, row = idx // rows, idx % rows
        if j == 0:
            base = cols / (2 * math.pi)
        r = base + row
        angle = 2 * math.pi * col / cols
        chunks.append(np.column_stack([r * np.cos(angle), r * np.sin(angle)]))
        labels.append(np.full(size, j))
        base += rows - 1 + params["gap"]
    points = np.vstack(chunks)
    return points + rng.normal(scale=params["jitter"], size=points.shape), np.concatenate(labels)


_GENERATORS = {"moons": _moons, "blobs": _blobs, "rings": _rings}


def _fit_to_bbox(points: np.ndarray, bbox: np.ndarray, margin: float = 0.02) -> np.ndarray:
    """Isotropic scale + shift into bbox (preserves neighbor rankings)."""
    lo, hi = points.min(axis=0), points.max(axis=0)
    extent = np.where(hi - lo > 0, hi - lo, 1.0)
    scale = (1 - 2 * margin) * float(np.min((bbox[1] - bbox[0]) / extent))
    return (points - (lo + hi) / 2) * scale + (bbox[0] + bbox[1]) / 2


def generate_dataset(kind: str, n_points: int, seed: int, params: dict | None = None) -> Dataset:
    """Generate a synthetic dataset of `n_points` (a power of two >= 2) points."""
    if kind not in DATASET_KINDS:
        raise ConfigError(f"unknown dataset kind '{kind}' (expected one of {', '.join(DATASET_KINDS)})")
    if n_points < 2 or not is_power_of_two(n_points):
        raise ConfigError(f"n_points must be a power of two >= 2, got {n_points}")
    merged = {**_DEFAULT_PARAMS[kind], **(params or {})}
    rng = np.random.default_rng(seed)
    raw, truth = _GENERATORS[kind](n_points, rng, merged)
    bbox = np.array(BBOXES[kind], dtype=float)
    points = _fit_to_bbox(raw, bbox)
    logger.debug("generated %s dataset: N=%d seed=%d", kind, n_points, seed)
    return Dataset(
        points=points,
        seed=seed,
        kind=kind,
        bbox=bbox,
        meta={"original_n": n_points, "pad_indices": [], "truth": truth.tolist(), "params": merged},
    )


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------


def _parse_csv(path: str) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    try:
        with open(path, newline="") as f:
            for lineno, record in enumerate(csv.reader(f), 1):
                if not record or (record[0].lstrip().startswith("#")):
                    continue
                if width is None:
                    width = len(record)
                elif len(record) != width:
                    raise DataError(f"{path}: row {lineno} has {len(record)} columns, expected {width}")
                values = []
                for col, cell in enumerate(record, 1):
                    try:
                        values.append(float(cell))
                    except ValueError:
                        raise DataError(f"{path}: non-numeric value {cell.strip()!r} at row {lineno}, column {col}") from None
                rows.append(values)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def load_dataset(path: str) -> Dataset:
    """Load a CSV point cloud, padding to the next power of two.

    Pads duplicate the point farthest from the centroid, offset by
    (j + 1) * PAD_OFFSET in every coordinate; their indices go in meta.
    """
    points = _parse_csv(path)
    n = points.shape[0]
    target = 1 << max(1, (n - 1).bit_length())
    pad_indices = list(range(n, target))
    if pad_indices:
        far = points[int(np.argmax(np.linalg.norm(points - points.mean(axis=0), axis=1)))]
        offsets = (np.arange(1, len(pad_indices) + 1) * PAD_OFFSET)[:, None]
        points = np.vstack([points, far + offsets])
        logger.info("padded %d points to %d", n, target)
    bbox = np.vstack([points.min(axis=0), points.max(axis=0)])
    return Dataset(points=points, seed=0, kind="file", bbox=bbox, meta={"original_n": n, "pad_indices": pad_indices, "source": path})


def save_dataset(data: Dataset, path: str) -> None:
    """Write points as CSV (one row per point) readable by load_dataset; pad points are dropped."""
    with open(path, "w") as f:
        f.write(f"# kind={data.kind} n={data.original_n} seed={data.seed}\n")
        for row in data.points[: data.original_n]:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# Graph + Laplacian
# ---------------------------------------------------------------------------


def nearest_neighbors(points: np.ndarray, count: int) -> np.ndarray:
    """Indices of the `count` nearest other points per row; ties go to the lower index."""
    dist = cdist(points, points)
    np.fill_diagonal(dist, np.inf)
    return np.argsort(dist, axis=1, kind="stable")[:, :count]


def build_knn_graph(data: Dataset, d: int) -> SimilarityGraph:
    """Mutual (d-1)-nearest-neighbor graph with unit weights."""
    n = data.n_points
    if d < 2 or d >= n:
        raise ConfigError(f"d must satisfy 2 <= d < N = {n}, got {d}")
    nbrs = nearest_neighbors(data.points, d - 1)
    knn = np.zeros((n, n), dtype=bool)
    knn[np.repeat(np.arange(n), d - 1), nbrs.ravel()] = True
    mutual = np.triu(knn & knn.T, k=1)
    edges = frozenset((int(i), int(j)) for i, j in np.argwhere(mutual))
    logger.debug("mutual %d-NN graph: %d nodes, %d edges", d - 1, n, len(edges))
    return SimilarityGraph(n, edges, d)


def build_laplacian(graph: SimilarityGraph) -> Laplacian:
    """L = D - W (unit weights) and L / (2d)."""
    w = graph.adjacency()
    deg = np.asarray(w.sum(axis=1)).ravel()
    raw = sparse.csr_matrix(sparse.diags(deg) - w)
    return Laplacian(raw=raw, rescaled=sparse.csr_matrix(raw / (2.0 * graph.d)), d=graph.d)


def connected_components(graph: SimilarityGraph) -> tuple[int, list[int]]:
    count, labels = _cc(graph.adjacency(), directed=False)
    return int(count), labels.astype(int).tolist()


def export_graph(graph: SimilarityGraph, path: str) -> None:
    """Debug edge list, one "i,j" per line."""
    with open(path, "w") as f:
        for i, j in sorted(graph.edges):
            f.write(f"{i},{j}\n")
