"""Public Python API for qspectral.

The same data functions the CLI uses, without formatting or printing.

Usage:
    from qspectral.api import RunConfig, run_pipeline
    report = run_pipeline(RunConfig(kind="blobs", n_points=256))
"""

# --- Classical oracles ---
from qspectral.core.classical import (
    Partition,
    Spectrum,
    classical_spectral_cluster,
    eigen_decompose,
    kmeans,
    read_partition,
    smallest_k_eigenpairs,
    write_partition,
)

# --- Cluster optimization ---
from qspectral.core.cluster_opt import (
    ClimbConfig,
    IndicatorMatrix,
    ThresholdSearchState,
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

# --- Data and graphs ---
from qspectral.core.data_graph import (
    Dataset,
    Laplacian,
    SimilarityGraph,
    build_knn_graph,
    build_laplacian,
    connected_components,
    export_graph,
    generate_dataset,
    load_dataset,
    save_dataset,
)

# --- Pipeline ---
from qspectral.core.pipeline import (
    RunConfig,
    RunReport,
    export_report,
    run_baseline,
    run_bench,
    run_pipeline,
)

# --- Circuit simulation ---
from qspectral.core.qsim import (
    DensityMatrix,
    QuantumState,
    RegisterLayout,
    ThresholdOracle,
    apply_qpe,
    classical_f,
    dump_state,
    grover_angle,
    grover_iteration,
    grover_iteration_count,
    grover_run,
    load_state,
    marked_probability,
    measure_phase_register,
    prepare_entangled_state,
    quantum_counting,
    reduced_density,
    trace_distance,
)

__all__ = [
    # Classical oracles
    "Partition",
    "Spectrum",
    "classical_spectral_cluster",
    "eigen_decompose",
    "kmeans",
    "read_partition",
    "smallest_k_eigenpairs",
    "write_partition",
    # Cluster optimization
    "ClimbConfig",
    "IndicatorMatrix",
    "ThresholdSearchState",
    "binary_search_threshold",
    "build_indicator",
    "estimate_expectation",
    "extract_partition",
    "hill_climb",
    "objective",
    "quantum_counter",
    "search_threshold",
    "spectrum_counter",
    # Data and graphs
    "Dataset",
    "Laplacian",
    "SimilarityGraph",
    "build_knn_graph",
    "build_laplacian",
    "connected_components",
    "export_graph",
    "generate_dataset",
    "load_dataset",
    "save_dataset",
    # Pipeline
    "RunConfig",
    "RunReport",
    "export_report",
    "run_baseline",
    "run_bench",
    "run_pipeline",
    # Circuit simulation
    "DensityMatrix",
    "QuantumState",
    "RegisterLayout",
    "ThresholdOracle",
    "apply_qpe",
    "classical_f",
    "dump_state",
    "grover_angle",
    "grover_iteration",
    "grover_iteration_count",
    "grover_run",
    "load_state",
    "marked_probability",
    "measure_phase_register",
    "prepare_entangled_state",
    "quantum_counting",
    "reduced_density",
    "trace_distance",
]
