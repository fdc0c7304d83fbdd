"""Shared argparse options for the commands that run (part of) the pipeline."""

from __future__ import annotations

from qspectral.config import (
    BACKENDS,
    DATASET_KINDS,
    DEFAULT_COUNTING_SHOTS,
    DEFAULT_D,
    DEFAULT_EPSILON0,
    DEFAULT_LAMBDA_EXP,
    DEFAULT_N_POINTS,
    DEFAULT_RESTARTS,
    resolve_qubit_cap,
    resolve_setting,
)
from qspectral.core.pipeline import RunConfig

REPORT_OUT_HELP = (
    "Write the report (format from --format or the file extension). "
    "A CSV report starts with a '# method=... k=...' line and an x,y,label header, then one row per point"
)


def add_data_options(p) -> None:
    p.add_argument("--kind", choices=DATASET_KINDS, default="moons", help="Synthetic dataset (default: moons)")
    p.add_argument("--data", dest="data_path", help="CSV point cloud instead of a generated dataset")
    p.add_argument("--n", type=int, default=DEFAULT_N_POINTS, help=f"Number of points, a power of two (default: {DEFAULT_N_POINTS})")
    p.add_argument("--seed", type=int, default=7, help="Seed for data generation and clustering (default: 7)")


def add_run_options(p) -> None:
    """Dataset, graph, threshold and simulator flags."""
    add_data_options(p)
    p.add_argument("--d", type=int, default=DEFAULT_D, help=f"Neighborhood parameter d (default: {DEFAULT_D})")
    p.add_argument(
        "--lambda-exp", type=int, default=DEFAULT_LAMBDA_EXP, help=f"Threshold 2^-e (default: e={DEFAULT_LAMBDA_EXP})"
    )
    p.add_argument("--backend", choices=BACKENDS, default="ideal", help="Simulator backend (default: ideal)")
    p.add_argument("--t", type=int, help="Phase register qubits (default: n + ceil(2 + log2(1/(2*epsilon0))))")
    p.add_argument("--t-prime", type=int, help="Counting register qubits (default: sized for |dk| < 0.5)")
    p.add_argument("--epsilon0", type=float, default=DEFAULT_EPSILON0, help="Phase estimation failure probability")
    p.add_argument("--qubit-cap", type=int, help="Dense backend qubit cap (default: $QSPECTRAL_QUBIT_CAP or 26)")
    p.add_argument(
        "--shots", type=int, default=DEFAULT_COUNTING_SHOTS, help=f"Counting measurement shots (default: {DEFAULT_COUNTING_SHOTS})"
    )
    p.add_argument("--restarts", type=int, help=f"Hill-climbing restarts (default: {DEFAULT_RESTARTS})")
    p.add_argument("--n-m", type=int, help="Shots per objective estimate during hill climbing (default: exact)")
    p.add_argument("--json", action="store_true", help="Output as JSON")


def run_config_from_args(args) -> RunConfig:
    """Build a RunConfig, filling unset values from the user config file."""
    return RunConfig(
        kind=args.kind,
        n_points=args.n,
        d=args.d,
        lambda_exp=args.lambda_exp,
        backend=args.backend,
        seed=args.seed,
        shots=args.shots,
        n_m=getattr(args, "n_m", None),
        restarts=int(resolve_setting("restarts", getattr(args, "restarts", None), DEFAULT_RESTARTS)),
        t=getattr(args, "t", None),
        t_prime=getattr(args, "t_prime", None),
        epsilon0=getattr(args, "epsilon0", DEFAULT_EPSILON0),
        qubit_cap=resolve_qubit_cap(getattr(args, "qubit_cap", None)),
        data_path=getattr(args, "data_path", None),
    )
