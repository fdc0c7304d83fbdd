"""Indicator matrices, the Tr(rho X X^T) objective, hill climbing and the threshold binary search."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from qspectral.config import (
    CLIMB_ITERS_PER_POINT,
    DEFAULT_RESTARTS,
    RESTART_SEED_STRIDE,
)
from qspectral.core.classical import Partition, canonical_labels, eigen_decompose
from qspectral.core.qsim import (
    DensityMatrix,
    QuantumState,
    RegisterLayout,
    ThresholdOracle,
    apply_qpe,
    prepare_entangled_state,
    quantum_counting,
    rescaled_matrix,
)
from qspectral.errors import ConfigError, CountingAmbiguityError, EmptyClusterError, UnreachableTargetError
from qspectral.util.log import get_logger

logger = get_logger("cluster_opt")

_IMPROVEMENT_TOL = 1e-12


# ---------------------------------------------------------------------------
# Indicator matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IndicatorMatrix:
    """x[i, j] = 1/sqrt(s_j) if point i is in cluster j, else 0."""

    x: np.ndarray
    sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        nonzero = np.count_nonzero(self.x, axis=1)
        if np.any(nonzero != 1):
            raise ConfigError("every indicator row needs exactly one nonzero entry")
        if any(s < 1 for s in self.sizes):
            raise EmptyClusterError("indicator matrix has an empty cluster")
        if not np.allclose(self.x.T @ self.x, np.eye(self.x.shape[1]), atol=1e-10):
            raise ConfigError("indicator columns must be orthonormal (entries 1/sqrt(s_j))")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def k(self) -> int:
        return self.x.shape[1]

    def projector(self) -> np.ndarray:
        return self.x @ self.x.T


def build_indicator(partition: Partition) -> IndicatorMatrix:
    labels = partition.as_array()
    sizes = np.bincount(labels, minlength=partition.k)
    if np.any(sizes == 0):
        raise EmptyClusterError(f"cluster(s) {np.flatnonzero(sizes == 0).tolist()} are empty")
    x = np.zeros((partition.n, partition.k))
    x[np.arange(partition.n), labels] = 1 / np.sqrt(sizes[labels])
    return IndicatorMatrix(x, tuple(int(s) for s in sizes))


def extract_partition(indicator: IndicatorMatrix) -> Partition:
    labels = np.argmax(indicator.x != 0, axis=1)
    return Partition.from_labels(labels, indicator.k)


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------


def objective(rho: DensityMatrix, indicator: IndicatorMatrix) -> float:
    """Tr(rho X X^T)."""
    if rho.n != indicator.n:
        raise ConfigError(f"density matrix is {rho.n}x{rho.n} but indicator has {indicator.n} rows")
    x = indicator.x
    return float(np.einsum("ij,ik,jk->", rho.real(), x, x))


def estimate_expectation(rho: DensityMatrix, indicator: IndicatorMatrix, n_m: int, seed: int) -> float:
    """Fraction of n_M projective measurements of X X^T that return 1."""
    if n_m < 1:
        raise ConfigError(f"n_M must be >= 1, got {n_m}")
    p = min(1.0, max(0.0, objective(rho, indicator)))
    return float(np.random.default_rng(seed).binomial(n_m, p) / n_m)


# ---------------------------------------------------------------------------
# Hill climbing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClimbConfig:
    """shots None evaluates the objective exactly; otherwise each value is an n_M-shot estimate."""

    restarts: int = DEFAULT_RESTARTS
    seed: int = 0
    shots: int | None = None
    max_iters: int | None = None

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise ConfigError(f"restarts must be >= 1, got {self.restarts}")
        if self.shots is not None and self.shots < 1:
            raise ConfigError(f"shots must be >= 1, got {self.shots}")
        if self.max_iters is not None and self.max_iters < 0:
            raise ConfigError(f"max_iters must be >= 0, got {self.max_iters}")

    @property
    def exact(self) -> bool:
        return self.shots is None

    def iteration_cap(self, k: int, n_points: int) -> int:
        return CLIMB_ITERS_PER_POINT * k * n_points if self.max_iters is None else self.max_iters


class ClimbResult(NamedTuple):
    indicator: IndicatorMatrix
    partition: Partition
    value: float


def _random_labels(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform labels with clusters 0..k-1 each seeded by one distinct point."""
    labels = rng.integers(k, size=n)
    labels[rng.permutation(n)[:k]] = np.arange(k)
    return labels


class _ClimbState:
    """Cluster sums S_j = 1^T rho[C_j, C_j] 1 and R = rho @ onehot, updated per move."""

    def __init__(self, rho: np.ndarray, labels: np.ndarray, k: int):
        self.rho = rho
        self.labels = labels.copy()
        self.k = k
        onehot = np.zeros((len(labels), k))
        onehot[np.arange(len(labels)), labels] = 1
        self.r = rho @ onehot
        self.sums = np.einsum("ij,ij->j", onehot, self.r)
        self.sizes = onehot.sum(axis=0)

    def value(self) -> float:
        return float(np.sum(self.sums / self.sizes))

    def neighbor_values(self) -> np.ndarray:
        """Objective after moving point i to cluster b; -inf where the move is disallowed."""
        n = len(self.labels)
        rows = np.arange(n)
        a = self.labels
        diag = np.diag(self.rho)
        base = self.sums / self.sizes
        s_a = self.sizes[a]
        with np.errstate(divide="ignore", invalid="ignore"):
            new_a = np.where(s_a > 1, (self.sums[a] - 2 * self.r[rows, a] + diag) / (s_a - 1), 0.0)
        new_b = (self.sums[None, :] + 2 * self.r + diag[:, None]) / (self.sizes[None, :] + 1)
        values = self.value() - base[a][:, None] - base[None, :] + new_a[:, None] + new_b
        values[rows, a] = -np.inf
        values[s_a <= 1, :] = -np.inf
        return values

    def move(self, i: int, b: int) -> None:
        a = self.labels[i]
        d = self.rho[i, i]
        self.sums[a] += -2 * self.r[i, a] + d
        self.sums[b] += 2 * self.r[i, b] + d
        self.sizes[a] -= 1
        self.sizes[b] += 1
        self.r[:, a] -= self.rho[:, i]
        self.r[:, b] += self.rho[:, i]
        self.labels[i] = b


def _climb_once(
    rho: np.ndarray,
    k: int,
    cfg: ClimbConfig,
    rng: np.random.Generator,
    restart: int,
    trace: list[dict] | None,
) -> tuple[np.ndarray, float]:
    n = rho.shape[0]
    state = _ClimbState(rho, _random_labels(n, k, rng), k)
    cap = cfg.iteration_cap(k, n)

    def measured(p):
        if cfg.exact:
            return p
        return rng.binomial(cfg.shots, np.clip(p, 0.0, 1.0)) / cfg.shots

    current = measured(state.value())
    margin = _IMPROVEMENT_TOL if cfg.exact else 2 / math.sqrt(cfg.shots)
    for iteration in range(cap):
        exact_values = state.neighbor_values()
        allowed = np.isfinite(exact_values)
        if not allowed.any():
            break
        estimates = np.where(allowed, measured(np.where(allowed, exact_values, 0.0)), -np.inf)
        i, b = np.unravel_index(int(np.argmax(estimates)), estimates.shape)
        if estimates[i, b] - current <= margin:
            break
        frm = int(state.labels[i])
        state.move(int(i), int(b))
        current = float(estimates[i, b])
        if trace is not None:
            trace.append({"restart": restart, "iteration": iteration, "move": [int(i), frm, int(b)], "value": current})
    final = state.value() if cfg.exact else measured(state.value())
    return state.labels, float(final)


def hill_climb(
    rho: DensityMatrix,
    k: int,
    cfg: ClimbConfig | None = None,
    *,
    trace: list[dict] | None = None,
) -> ClimbResult:
    """Steepest ascent over single-point reassignments, best of cfg.restarts random starts.

    Appends one {restart, iteration, move: [point, from, to], value} record per accepted
    move to ``trace`` when given.
    """
    cfg = cfg or ClimbConfig()
    n = rho.n
    if not 1 <= k <= n:
        raise ConfigError(f"k must satisfy 1 <= k <= N = {n}, got {k}")
    matrix = rho.real()
    if k == 1:
        partition = Partition.from_labels([0] * n, 1)
        indicator = build_indicator(partition)
        return ClimbResult(indicator, partition, objective(rho, indicator))

    best_labels, best_value = None, -np.inf
    for restart in range(cfg.restarts):
        rng = np.random.default_rng(cfg.seed + RESTART_SEED_STRIDE * restart)
        labels, value = _climb_once(matrix, k, cfg, rng, restart, trace)
        logger.debug("restart %d: value %.12f", restart, value)
        if value > best_value:
            best_labels, best_value = labels, value
    partition = Partition.from_labels(canonical_labels(best_labels), k)
    indicator = build_indicator(partition)
    value = objective(rho, indicator) if cfg.exact else best_value
    logger.info("hill climb: best value %.6f over %d restart(s)", value, cfg.restarts)
    return ClimbResult(indicator, partition, value)


# ---------------------------------------------------------------------------
# Threshold search
# ---------------------------------------------------------------------------


@dataclass
class ThresholdSearchState:
    lo: float
    hi: float
    k0: int
    delta_floor: float
    history: list[tuple[float, int]] = field(default_factory=list)
    result: float | None = None

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ConfigError(f"need lo < hi, got lo={self.lo}, hi={self.hi}")
        if self.delta_floor <= 0:
            raise ConfigError(f"delta_floor must be > 0, got {self.delta_floor}")

    @property
    def max_probes(self) -> int:
        return max(1, math.ceil(math.log2((self.hi - self.lo) / self.delta_floor)))


def search_threshold(
    counting: Callable[[float], int], k0: int, lo: float, hi: float, delta_floor: float
) -> ThresholdSearchState:
    """Midpoint search for a threshold whose count is k0.

    Every counting call, endpoints included, is a probe: it lands in the state's
    history and the total never exceeds max_probes.
    """
    state = ThresholdSearchState(lo, hi, k0, delta_floor)
    budget = state.max_probes

    def count_at(threshold: float) -> int:
        count = counting(threshold)
        state.history.append((threshold, count))
        logger.debug("probe %.6g -> %d", threshold, count)
        return count

    count_hi = count_at(hi)
    if count_hi == k0:
        state.result = hi
        return state
    if budget < 2:
        raise UnreachableTargetError(k0, lo, hi, None, count_hi)
    count_lo = count_at(lo)
    if count_lo == k0:
        state.result = lo
        return state
    if not count_lo < k0 < count_hi:
        raise UnreachableTargetError(k0, lo, hi, count_lo, count_hi)
    while len(state.history) < budget:
        mid = (lo + hi) / 2
        count = count_at(mid)
        if count == k0:
            state.result = mid
            return state
        if count < k0:
            lo, count_lo = mid, count
        else:
            hi, count_hi = mid, count
    raise UnreachableTargetError(k0, lo, hi, count_lo, count_hi)


def binary_search_threshold(
    counting: Callable[[float], int], k0: int, lo: float, hi: float, delta_floor: float
) -> float:
    return search_threshold(counting, k0, lo, hi, delta_floor).result


def spectrum_counter(laplacian) -> Callable[[float], int]:
    """Count rescaled eigenvalues strictly below the threshold, from the dense eigensolver."""
    eigenvalues = eigen_decompose(rescaled_matrix(laplacian)).eigenvalues
    return lambda threshold: int(np.count_nonzero(eigenvalues < threshold))


def quantum_counter(
    laplacian,
    layout: RegisterLayout,
    backend: str = "ideal",
    *,
    shots: int | None = None,
    seed: int = 0,
    qubit_cap: int | None = None,
) -> Callable[[float], int]:
    """Counting callable backed by the simulated circuit; phase estimation runs once.

    An ambiguous counting outcome means at least N/2 values are marked; the callable
    reports N for it so a threshold search treats it as above any reachable target.
    """
    psi_pe: QuantumState = apply_qpe(prepare_entangled_state(layout, backend, qubit_cap=qubit_cap), laplacian, layout)
    extra = {} if shots is None else {"shots": shots}

    def count(threshold: float) -> int:
        oracle = ThresholdOracle(threshold, layout.t)
        try:
            return quantum_counting(psi_pe, oracle, layout.t_prime, backend, seed=seed, qubit_cap=qubit_cap, **extra).k
        except CountingAmbiguityError:
            logger.debug("threshold %.6g: ambiguous count, reporting N", threshold)
            return layout.n_points

    return count
