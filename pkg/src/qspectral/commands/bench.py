"""Timing command: bench."""

from __future__ import annotations

from qspectral.config import is_power_of_two
from qspectral.core.pipeline import run_bench
from qspectral.errors import ConfigError
from qspectral.util.args import add_run_options, run_config_from_args
from qspectral.util.formatting import format_output, format_table


def parse_sizes(text: str) -> list[int]:
    """Parse "16,32,64" into powers of two."""
    try:
        sizes = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as e:
        raise ConfigError(f"--sizes must be comma-separated integers, got {text!r}") from e
    bad = [n for n in sizes if n < 2 or not is_power_of_two(n)]
    if not sizes or bad:
        raise ConfigError(f"--sizes must be powers of two >= 2, got {text!r}")
    return sizes


def cmd_bench(args) -> None:
    """Wall-clock timings of classical vs simulated pipelines over a range of N."""
    rows = run_bench(parse_sizes(args.sizes), run_config_from_args(args))
    table_rows = [
        [str(r["n"]), r["backend"], str(r["k"]), f"{r['classical_s']:.3f}", f"{r['quantum_s']:.3f}"] for r in rows
    ]
    text = format_table(["N", "Backend", "k", "Classical (s)", "Quantum (s)"], table_rows, [6, 7, 3, 13, 11])
    format_output(args, text, json_data=rows)


def register(subparsers) -> None:
    """Register the bench subcommand."""
    p = subparsers.add_parser("bench", help="Per-stage timings for a range of N")
    add_run_options(p)
    p.add_argument("--sizes", default="16,32,64,128,256", help="Comma-separated N values (default: 16,32,64,128,256)")
    p.set_defaults(func=cmd_bench)
