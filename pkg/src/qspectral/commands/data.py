"""Dataset and graph commands: gen-data, graph."""

from __future__ import annotations

import numpy as np

from qspectral.config import DEFAULT_D, DEFAULT_LAMBDA_EXP, ZERO_EIGENVALUE_TOL, lambda_from_exponent
from qspectral.core.classical import eigen_decompose
from qspectral.core.data_graph import (
    Dataset,
    SimilarityGraph,
    build_knn_graph,
    build_laplacian,
    connected_components,
    export_graph,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from qspectral.util.args import add_data_options
from qspectral.util.formatting import format_float, format_output, format_table


def load_or_generate(args) -> Dataset:
    if getattr(args, "data_path", None):
        return load_dataset(args.data_path)
    return generate_dataset(args.kind, args.n, args.seed)


# ---------------------------------------------------------------------------
# gen-data
# ---------------------------------------------------------------------------


def get_dataset_summary(data: Dataset) -> dict:
    counts = np.bincount(data.truth).tolist() if data.truth is not None else []
    return {
        "kind": data.kind,
        "n_points": data.n_points,
        "original_n": data.original_n,
        "dim": data.dim,
        "seed": data.seed,
        "bbox": data.bbox.tolist(),
        "cluster_sizes": counts,
    }


def cmd_gen_data(args) -> None:
    """Generate a synthetic point cloud and optionally write it as CSV."""
    data = load_or_generate(args)
    summary = get_dataset_summary(data)
    if args.out:
        save_dataset(data, args.out)
        summary["out"] = args.out

    lo, hi = data.bbox
    lines = [
        f"{data.kind} dataset: N={data.n_points}, M={data.dim}, seed={data.seed}",
        f"bbox: [{', '.join(format_float(v, 4) for v in lo)}] .. [{', '.join(format_float(v, 4) for v in hi)}]",
    ]
    if summary["cluster_sizes"]:
        lines.append(f"cluster sizes: {', '.join(str(c) for c in summary['cluster_sizes'])}")
    if args.out:
        lines.append(f"Wrote {data.original_n} points to {args.out}")
    format_output(args, "\n".join(lines), json_data=summary)


# ---------------------------------------------------------------------------
# graph
# ---------------------------------------------------------------------------


def get_graph_summary(data: Dataset, d: int, lambda_threshold: float) -> tuple[dict, SimilarityGraph]:
    """Graph statistics plus the Laplacian facts the quantum pipeline depends on."""
    graph = build_knn_graph(data, d)
    laplacian = build_laplacian(graph)
    n_components, labels = connected_components(graph)
    raw = eigen_decompose(laplacian.raw).eigenvalues
    rescaled = raw / (2 * d)
    return {
        "n_nodes": graph.n_nodes,
        "n_edges": len(graph.edges),
        "d": d,
        "max_degree": int(graph.degrees().max()) if graph.n_nodes else 0,
        "components": n_components,
        "component_sizes": np.bincount(labels).tolist(),
        "zero_eigenvalues": int(np.count_nonzero(np.abs(raw) <= ZERO_EIGENVALUE_TOL)),
        "lambda_threshold": lambda_threshold,
        "below_threshold": int(np.count_nonzero(rescaled < lambda_threshold)),
        "smallest_rescaled": rescaled[: min(6, len(rescaled))].tolist(),
        "max_rescaled": float(rescaled[-1]),
        "max_row_sum": float(np.max(np.abs(np.asarray(laplacian.raw.sum(axis=1))))),
    }, graph


def cmd_graph(args) -> None:
    """Build the mutual nearest-neighbor graph and report its Laplacian spectrum."""
    data = load_or_generate(args)
    summary, graph = get_graph_summary(data, args.d, lambda_from_exponent(args.lambda_exp))
    if args.out:
        export_graph(graph, args.out)
        summary["out"] = args.out

    headers = ["Quantity", "Value"]
    rows = [
        ["nodes", str(summary["n_nodes"])],
        ["edges", str(summary["n_edges"])],
        ["max degree", f"{summary['max_degree']} (d - 1 = {args.d - 1})"],
        ["components", f"{summary['components']} ({', '.join(map(str, summary['component_sizes']))})"],
        ["zero eigenvalues", str(summary["zero_eigenvalues"])],
        [f"eigenvalues < 2^-{args.lambda_exp}", str(summary["below_threshold"])],
        ["smallest (rescaled)", ", ".join(format_float(v, 4) for v in summary["smallest_rescaled"])],
        ["largest (rescaled)", format_float(summary["max_rescaled"], 6)],
    ]
    text = format_table(headers, rows, [22, 48])
    if args.out:
        text += f"\nWrote {summary['n_edges']} edges to {args.out}"
    format_output(args, text, json_data=summary)


def register(subparsers) -> None:
    """Register dataset and graph subcommands."""
    p = subparsers.add_parser("gen-data", help="Generate a synthetic dataset")
    add_data_options(p)
    p.add_argument("--out", help="Write points as CSV")
    p.add_argument("--json", action="store_true", help="Output as JSON")
    p.set_defaults(func=cmd_gen_data)

    p = subparsers.add_parser("graph", help="Mutual nearest-neighbor graph and Laplacian spectrum")
    add_data_options(p)
    p.add_argument("--d", type=int, default=DEFAULT_D, help=f"Neighborhood parameter d (default: {DEFAULT_D})")
    p.add_argument("--lambda-exp", type=int, default=DEFAULT_LAMBDA_EXP, help="Threshold 2^-e")
    p.add_argument("--out", help="Write the edge list (one 'i,j' per line)")
    p.add_argument("--json", action="store_true", help="Output as JSON")
    p.set_defaults(func=cmd_graph)
