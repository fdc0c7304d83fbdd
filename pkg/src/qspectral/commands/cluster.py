"""Quantum pipeline commands: cluster, count."""

from __future__ import annotations

import os

from qspectral.core.classical import Partition, write_partition
from qspectral.core.cluster_opt import quantum_counter, search_threshold, spectrum_counter
from qspectral.core.data_graph import build_knn_graph, build_laplacian
from qspectral.core.pipeline import REPORT_FORMATS, RunConfig, RunReport, export_report, load_for_config, run_pipeline
from qspectral.core.qsim import (
    RegisterLayout,
    ThresholdOracle,
    apply_qpe,
    dump_state,
    measure_phase_register,
    prepare_entangled_state,
    quantum_counting,
)
from qspectral.util.args import REPORT_OUT_HELP, add_run_options, run_config_from_args
from qspectral.util.formatting import die, format_float, format_output, format_table, to_json


def infer_format(path: str, explicit: str | None) -> str:
    """--format wins; otherwise the output file's extension, defaulting to json."""
    if explicit:
        return explicit
    ext = os.path.splitext(path)[1].lstrip(".").lower()
    return ext if ext in REPORT_FORMATS else "json"


def report_rows(report: RunReport) -> list[list[str]]:
    rows = [["k", str(report.k)]]
    if report.k_classical is not None:
        rows.append(["k (dense spectrum)", str(report.k_classical)])
    if report.objective is not None:
        rows.append(["objective", format_float(report.objective, 8)])
    if report.layout:
        rows.append(["t / t' / r", f"{report.layout['t']} / {report.layout['t_prime']} / {report.layout['r']}"])
    for name, score in sorted(report.agreement.items()):
        rows.append([f"ARI vs {name}", format_float(score, 4)])
    rows.append(["total time", f"{sum(report.timings.values()):.3f}s"])
    return rows


# ---------------------------------------------------------------------------
# cluster
# ---------------------------------------------------------------------------


def cmd_cluster(args) -> None:
    """Run the full quantum spectral clustering pipeline."""
    config = run_config_from_args(args)
    trace: list[dict] | None = [] if args.trace else None
    report = run_pipeline(config, trace=trace)

    written = []
    if args.out:
        fmt = infer_format(args.out, args.format)
        export_report(report, fmt, args.out)
        written.append(f"Wrote {fmt} report to {args.out}")
    if args.labels_out:
        write_partition(Partition.from_labels(report.labels), args.labels_out)
        written.append(f"Wrote {len(report.labels)} labels to {args.labels_out}")
    if trace is not None:
        with open(args.trace, "w") as f:
            f.write(to_json(trace) + "\n")
        written.append(f"Wrote {len(trace)} optimizer moves to {args.trace}")

    title = f"{config.kind if not config.data_path else config.data_path}: N={len(report.labels)}, backend={config.backend}"
    text = "\n".join([title, format_table(["Result", "Value"], report_rows(report), [20, 30]), *written])
    format_output(args, text, json_data=report.to_dict())


# ---------------------------------------------------------------------------
# count
# ---------------------------------------------------------------------------


def get_count(config: RunConfig, *, histogram_shots: int = 0, dump_path: str | None = None, target_k: int | None = None) -> dict:
    """Quantum counting of eigenvalues below the threshold, cross-checked against the dense spectrum."""
    data = load_for_config(config)
    laplacian = build_laplacian(build_knn_graph(data, config.d))
    layout = RegisterLayout.for_points(data.n_points, t=config.t, t_prime=config.t_prime, epsilon0=config.epsilon0)
    psi_pe = apply_qpe(prepare_entangled_state(layout, config.backend, qubit_cap=config.qubit_cap), laplacian, layout)
    oracle = ThresholdOracle(config.lambda_threshold, layout.t)
    k, theta = quantum_counting(
        psi_pe, oracle, layout.t_prime, config.backend, shots=config.shots, seed=config.seed, qubit_cap=config.qubit_cap
    )
    result = {
        "k": k,
        "theta": theta,
        "k_classical": spectrum_counter(laplacian)(config.lambda_threshold),
        "lambda_threshold": config.lambda_threshold,
        "t": layout.t,
        "t_prime": layout.t_prime,
        "backend": config.backend,
    }
    if histogram_shots:
        result["phase_histogram"] = measure_phase_register(psi_pe, histogram_shots, config.seed)
    if dump_path:
        dump_state(psi_pe, dump_path)
        result["dump"] = dump_path
    if target_k is not None:
        resolution = 2.0**-layout.t
        counter = quantum_counter(laplacian, layout, config.backend, shots=config.shots, seed=config.seed, qubit_cap=config.qubit_cap)
        search = search_threshold(counter, target_k, resolution, 1.0, resolution)
        result["search"] = {"k0": target_k, "lambda_threshold": search.result, "probes": search.history}
    return result


def cmd_count(args) -> None:
    """Estimate k, the number of Laplacian eigenvalues below the threshold."""
    if args.histogram < 0:
        die("--histogram must be >= 0", 2)
    config = run_config_from_args(args)
    result = get_count(config, histogram_shots=args.histogram, dump_path=args.dump_state, target_k=args.target_k)

    rows = [
        ["k (counting)", str(result["k"])],
        ["k (dense spectrum)", str(result["k_classical"])],
        ["theta", format_float(result["theta"], 6)],
        ["lambda threshold", format_float(result["lambda_threshold"])],
        ["t / t'", f"{result['t']} / {result['t_prime']}"],
    ]
    if "search" in result:
        rows.append([f"threshold for k={args.target_k}", format_float(result["search"]["lambda_threshold"])])
        rows.append(["search probes", str(len(result["search"]["probes"]))])
    text = format_table(["Quantity", "Value"], rows, [20, 24])
    if "phase_histogram" in result:
        top = sorted(result["phase_histogram"].items(), key=lambda kv: (-kv[1], kv[0]))[:10]
        hist_rows = [[str(x), format_float(x / 2 ** result["t"], 6), str(c)] for x, c in top]
        text += "\nPhase register outcomes:\n" + format_table(["x", "x/2^t", "Count"], hist_rows, [8, 12, 6])
    if "dump" in result:
        text += f"\nWrote state to {result['dump']}"
    format_output(args, text, json_data=result)


def register(subparsers) -> None:
    """Register quantum pipeline subcommands."""
    p = subparsers.add_parser("cluster", help="Quantum spectral clustering (full pipeline)")
    add_run_options(p)
    p.add_argument("--out", help=REPORT_OUT_HELP)
    p.add_argument("--format", choices=REPORT_FORMATS, help="Report format: json, csv or svg")
    p.add_argument("--labels-out", help="Write labels as CSV, one per line")
    p.add_argument("--trace", help="Write accepted hill-climbing moves as JSON")
    p.set_defaults(func=cmd_cluster)

    p = subparsers.add_parser("count", help="Quantum counting of eigenvalues below the threshold")
    add_run_options(p)
    p.add_argument("--histogram", type=int, default=0, help="Also sample the phase register N times")
    p.add_argument("--dump-state", help="Write the post-QPE state (debug format)")
    p.add_argument("--target-k", type=int, help="Binary-search a threshold giving this many clusters")
    p.set_defaults(func=cmd_count)
