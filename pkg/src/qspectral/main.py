"""Top-level argparse router for qspectral."""

import argparse
import sys

from qspectral import __version__
from qspectral.commands.baseline import register as register_baseline
from qspectral.commands.bench import register as register_bench
from qspectral.commands.cluster import register as register_cluster
from qspectral.commands.data import register as register_data
from qspectral.errors import ConfigError, QSpectralError, StageError
from qspectral.util.formatting import die
from qspectral.util.log import setup_logging

_GROUPED_HELP = """\
Quantum spectral clustering simulator.

Commands by category:

  Data:       gen-data, graph
  Quantum:    cluster, count
  Classical:  baseline
  Timing:     bench

Run `qspectral <command> --help` for details on any command.
"""


def exit_code(error: QSpectralError) -> int:
    """2 for bad configuration, 3 for a failure while running a stage."""
    if isinstance(error, ConfigError):
        return 2
    if isinstance(error, StageError) and isinstance(error.cause, ConfigError):
        return 2
    return 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qspectral",
        description=_GROUPED_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"qspectral {__version__}",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="Log to stderr (-v info, -vv debug)")
    subparsers = parser.add_subparsers(dest="command")

    register_data(subparsers)
    register_cluster(subparsers)
    register_baseline(subparsers)
    register_bench(subparsers)
    return parser


def main(argv: list[str] | None = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        sys.exit(0)

    setup_logging(args.verbose)

    # Dispatch to the handler set by set_defaults(func=...)
    try:
        args.func(args)
    except QSpectralError as e:
        die(str(e), exit_code(e))
    except KeyboardInterrupt:
        print("\nCancelled.", file=sys.stderr)
        sys.exit(130)
