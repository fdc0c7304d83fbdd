"""End-to-end quantum spectral clustering runs, classical baselines, reports and benchmarks."""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.metrics import adjusted_rand_score

from qspectral.config import (
    BACKENDS,
    DATASET_KINDS,
    DEFAULT_COUNTING_SHOTS,
    DEFAULT_D,
    DEFAULT_EPSILON0,
    DEFAULT_LAMBDA_EXP,
    DEFAULT_N_POINTS,
    DEFAULT_RESTARTS,
    is_power_of_two,
    lambda_from_exponent,
)
from qspectral.core.classical import classical_spectral_cluster, kmeans
from qspectral.core.cluster_opt import ClimbConfig, hill_climb, spectrum_counter
from qspectral.core.data_graph import (
    Dataset,
    build_knn_graph,
    build_laplacian,
    connected_components,
    generate_dataset,
    load_dataset,
)
from qspectral.core.qsim import (
    RegisterLayout,
    ThresholdOracle,
    apply_qpe,
    check_qubit_cap,
    grover_iteration_count,
    grover_run,
    marked_probability,
    prepare_entangled_state,
    quantum_counting,
    reduced_density,
)
from qspectral.errors import ConfigError, QSpectralError, StageError
from qspectral.util.formatting import to_json
from qspectral.util.log import get_logger, timed

logger = get_logger("pipeline")

BASELINE_METHODS = ("kmeans_raw", "classical_spectral")
REPORT_FORMATS = ("json", "csv", "svg")


@dataclass(frozen=True)
class RunConfig:
    kind: str = "moons"
    n_points: int = DEFAULT_N_POINTS
    d: int = DEFAULT_D
    lambda_exp: int = DEFAULT_LAMBDA_EXP
    backend: str = "ideal"
    seed: int = 7
    shots: int = DEFAULT_COUNTING_SHOTS
    n_m: int | None = None
    restarts: int = DEFAULT_RESTARTS
    t: int | None = None
    t_prime: int | None = None
    epsilon0: float = DEFAULT_EPSILON0
    qubit_cap: int | None = None
    data_path: str | None = None

    def __post_init__(self) -> None:
        if self.data_path is None and self.kind not in DATASET_KINDS:
            raise ConfigError(f"unknown dataset kind '{self.kind}' (expected one of {', '.join(DATASET_KINDS)})")
        if self.data_path is None and (self.n_points < 2 or not is_power_of_two(self.n_points)):
            raise ConfigError(f"--n must be a power of two >= 2, got {self.n_points}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend '{self.backend}' (expected one of {', '.join(BACKENDS)})")
        if self.d < 2:
            raise ConfigError(f"d must be >= 2, got {self.d}")
        if self.lambda_exp < 0:
            raise ConfigError(f"lambda exponent must be >= 0, got {self.lambda_exp}")
        if self.shots < 1:
            raise ConfigError(f"shots must be >= 1, got {self.shots}")
        if self.restarts < 1:
            raise ConfigError(f"restarts must be >= 1, got {self.restarts}")

    @property
    def lambda_threshold(self) -> float:
        return lambda_from_exponent(self.lambda_exp)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambda_threshold"] = self.lambda_threshold
        return out


@dataclass(eq=False)
class RunReport:
    params: dict
    method: str
    k: int
    labels: list[int]
    objective: float | None = None
    k_classical: int | None = None
    layout: dict | None = None
    baselines: dict[str, list[int]] = field(default_factory=dict)
    agreement: dict[str, float] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    points: np.ndarray | None = field(default=None, repr=False)
    bbox: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, include_timings: bool = True) -> dict:
        out = {
            "params": self.params,
            "method": self.method,
            "backend": self.params.get("backend") if self.method == "quantum" else None,
            "k": self.k,
            "k_classical": self.k_classical,
            "objective": self.objective,
            "layout": self.layout,
            "labels": self.labels,
            "baselines": self.baselines,
            "agreement": self.agreement,
        }
        if include_timings:
            out["timings"] = self.timings
        return out

    def to_json(self, include_timings: bool = True) -> str:
        return to_json(self.to_dict(include_timings))


@contextmanager
def _stage(name: str, timings: dict[str, float]) -> Iterator[None]:
    """Time a pipeline stage and attach its name to any failure."""
    try:
        with timed(logger, name, timings):
            yield
    except StageError:
        raise
    except (QSpectralError, ValueError, ArithmeticError, np.linalg.LinAlgError, OSError) as e:
        raise StageError(name, e) from e


def load_for_config(config: RunConfig) -> Dataset:
    if config.data_path:
        return load_dataset(config.data_path)
    return generate_dataset(config.kind, config.n_points, config.seed)


def _agreement(labels: list[int], references: dict[str, list[int]]) -> dict[str, float]:
    return {name: float(adjusted_rand_score(ref, labels)) for name, ref in references.items()}


def _references(data: Dataset, component_labels: list[int]) -> dict[str, list[int]]:
    n = data.original_n
    refs = {"components": component_labels[:n]}
    if data.truth is not None:
        refs["truth"] = list(data.truth)[:n]
    return refs


def run_pipeline(config: RunConfig, *, trace: list[dict] | None = None) -> RunReport:
    """Graph -> Laplacian -> preparation -> QPE -> counting -> Grover -> rho -> hill climb -> partition.

    Accepted hill-climbing moves are appended to ``trace`` when given.
    """
    timings: dict[str, float] = {}
    with _stage("data", timings):
        data = load_for_config(config)
    layout = RegisterLayout.for_points(data.n_points, t=config.t, t_prime=config.t_prime, epsilon0=config.epsilon0)
    if config.backend == "dense":
        check_qubit_cap(layout.t_prime + layout.qubits, config.qubit_cap)

    with _stage("graph", timings):
        graph = build_knn_graph(data, config.d)
        n_components, component_labels = connected_components(graph)
    with _stage("laplacian", timings):
        laplacian = build_laplacian(graph)
    with _stage("prepare", timings):
        state = prepare_entangled_state(layout, config.backend, qubit_cap=config.qubit_cap)
    with _stage("qpe", timings):
        psi_pe = apply_qpe(state, laplacian, layout)
    oracle = ThresholdOracle(config.lambda_threshold, layout.t)
    with _stage("counting", timings):
        k, theta = quantum_counting(
            psi_pe, oracle, layout.t_prime, config.backend, shots=config.shots, seed=config.seed, qubit_cap=config.qubit_cap
        )
        if k < 1:
            raise QSpectralError(f"counting found no eigenvalue below {config.lambda_threshold:g}")
        logger.info("counting: k=%d (theta=%.6f, %d component(s))", k, theta, n_components)
    with _stage("grover", timings):
        r = grover_iteration_count(k, data.n_points)
        psi_out = grover_run(psi_pe, oracle, r)
        logger.info("grover: r=%d, marked probability %.6f", r, marked_probability(psi_out, oracle))
    with _stage("density", timings):
        rho = reduced_density(psi_out)
    with _stage("climb", timings):
        result = hill_climb(rho, k, ClimbConfig(restarts=config.restarts, seed=config.seed, shots=config.n_m), trace=trace)
    with _stage("baselines", timings):
        baselines = {
            "classical_spectral": list(classical_spectral_cluster(laplacian, k, config.seed).labels),
            "kmeans_raw": list(kmeans(data.points, k, config.seed).labels),
        }
        k_classical = spectrum_counter(laplacian)(config.lambda_threshold)

    n = data.original_n
    labels = list(result.partition.labels)[:n]
    baselines = {name: lab[:n] for name, lab in baselines.items()}
    references = {**_references(data, component_labels), **baselines}
    return RunReport(
        params=config.to_dict(),
        method="quantum",
        k=k,
        labels=labels,
        objective=result.value,
        k_classical=k_classical,
        layout={"t": layout.t, "n": layout.n, "t_prime": layout.t_prime, "r": r},
        baselines=baselines,
        agreement=_agreement(labels, references),
        timings=timings,
        points=data.points[:n],
        bbox=data.bbox,
    )


def run_baseline(config: RunConfig, method: str) -> RunReport:
    """Classical clustering with k taken from the dense spectrum count below the threshold."""
    if method not in BASELINE_METHODS:
        raise ConfigError(f"unknown baseline '{method}' (expected one of {', '.join(BASELINE_METHODS)})")
    timings: dict[str, float] = {}
    with _stage("data", timings):
        data = load_for_config(config)
    with _stage("graph", timings):
        graph = build_knn_graph(data, config.d)
        _, component_labels = connected_components(graph)
    with _stage("laplacian", timings):
        laplacian = build_laplacian(graph)
        k = spectrum_counter(laplacian)(config.lambda_threshold)
    with _stage(method, timings):
        if method == "classical_spectral":
            partition = classical_spectral_cluster(laplacian, k, config.seed)
        else:
            partition = kmeans(data.points, k, config.seed)
    n = data.original_n
    labels = list(partition.labels)[:n]
    return RunReport(
        params=config.to_dict(),
        method=method,
        k=k,
        labels=labels,
        k_classical=k,
        baselines={method: labels},
        agreement=_agreement(labels, _references(data, component_labels)),
        timings=timings,
        points=data.points[:n],
        bbox=data.bbox,
    )


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def _write_csv(report: RunReport, path: str) -> None:
    points = report.points
    header = ["x", "y"] if points.shape[1] == 2 else [f"x{j + 1}" for j in range(points.shape[1])]
    with open(path, "w") as f:
        f.write(f"# method={report.method} k={report.k}\n")
        f.write(",".join([*header, "label"]) + "\n")
        for row, label in zip(points, report.labels):
            f.write(",".join([*(repr(float(v)) for v in row), str(label)]) + "\n")


def _write_svg(report: RunReport, path: str) -> None:
    from matplotlib.figure import Figure

    points = report.points
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    ax.scatter(points[:, 0], points[:, 1], c=report.labels, cmap="tab10", s=12, gid="points")
    if report.bbox is not None:
        ax.set_xlim(report.bbox[0, 0], report.bbox[1, 0])
        ax.set_ylim(report.bbox[0, 1], report.bbox[1, 1])
    ax.set_title(f"{report.method}: k={report.k}")
    fig.savefig(path, format="svg", metadata={"Date": None})


def export_report(report: RunReport, fmt: str, path: str) -> None:
    """Write the report as json (full report), csv (points + labels) or svg (scatter plot)."""
    if fmt not in REPORT_FORMATS:
        raise ConfigError(f"unknown report format '{fmt}' (expected one of {', '.join(REPORT_FORMATS)})")
    if fmt != "json" and report.points is None:
        raise ConfigError(f"{fmt} export needs the report's points")
    try:
        if fmt == "json":
            with open(path, "w") as f:
                f.write(report.to_json() + "\n")
        elif fmt == "csv":
            _write_csv(report, path)
        else:
            _write_svg(report, path)
    except OSError as e:
        raise ConfigError(f"cannot write {path}: {e}") from e
    logger.info("wrote %s report to %s", fmt, path)


# ---------------------------------------------------------------------------
# Bench
# ---------------------------------------------------------------------------


def run_bench(sizes: list[int], config: RunConfig | None = None) -> list[dict]:
    """Per-stage wall-clock timings of the classical and simulated pipelines for each N."""
    base = config or RunConfig()
    rows = []
    for n in sizes:
        cfg = RunConfig(**{**asdict(base), "n_points": n, "data_path": None})
        classical = run_baseline(cfg, "classical_spectral")
        quantum = run_pipeline(cfg)
        rows.append(
            {
                "n": n,
                "backend": cfg.backend,
                "k": quantum.k,
                "classical_s": sum(classical.timings.values()),
                "quantum_s": sum(quantum.timings.values()),
                "stages": quantum.timings,
            }
        )
        logger.info("bench N=%d: classical %.3fs, quantum %.3fs", n, rows[-1]["classical_s"], rows[-1]["quantum_s"])
    return rows
