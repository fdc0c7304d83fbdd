"""Classical baseline command: baseline."""

from __future__ import annotations

from qspectral.commands.cluster import infer_format, report_rows
from qspectral.core.pipeline import BASELINE_METHODS, REPORT_FORMATS, export_report, run_baseline
from qspectral.util.args import REPORT_OUT_HELP, add_run_options, run_config_from_args
from qspectral.util.formatting import format_output, format_table


def cmd_baseline(args) -> None:
    """Cluster with k-means on raw points or classical spectral clustering."""
    config = run_config_from_args(args)
    report = run_baseline(config, args.method)
    text = f"{args.method}: N={len(report.labels)}\n" + format_table(["Result", "Value"], report_rows(report), [20, 30])
    if args.out:
        fmt = infer_format(args.out, args.format)
        export_report(report, fmt, args.out)
        text += f"\nWrote {fmt} report to {args.out}"
    format_output(args, text, json_data=report.to_dict())


def register(subparsers) -> None:
    """Register the baseline subcommand."""
    p = subparsers.add_parser("baseline", help="Classical clustering baselines")
    add_run_options(p)
    p.add_argument("--method", choices=BASELINE_METHODS, default="classical_spectral", help="Baseline algorithm")
    p.add_argument("--out", help=REPORT_OUT_HELP)
    p.add_argument("--format", choices=REPORT_FORMATS, help="Report format: json, csv or svg")
    p.set_defaults(func=cmd_baseline)
