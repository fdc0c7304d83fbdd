"""Configuration management for qspectral.

Settings resolve most-specific-first:
1. Explicit argument / CLI flag
2. Environment variable (QSPECTRAL_QUBIT_CAP only)
3. User config in ~/.config/qspectral/config.json -> {"qspectral": {"qubit_cap": 24, "restarts": 20}}
4. Module defaults below
"""

from __future__ import annotations

import json
import math
import os
import sys

CONFIG_DIR = os.path.expanduser("~/.config/qspectral")
CONFIG_FILE = os.path.join(CONFIG_DIR, "config.json")

QUBIT_CAP_ENV = "QSPECTRAL_QUBIT_CAP"

# Graph / Laplacian
DEFAULT_D = 8
DEFAULT_N_POINTS = 256
ZERO_EIGENVALUE_TOL = 1e-8
SYMMETRY_TOL = 1e-10
PAD_OFFSET = 1e-9

# Threshold: lambda = 2 ** -DEFAULT_LAMBDA_EXP
DEFAULT_LAMBDA_EXP = 9

# Circuit simulation
DEFAULT_EPSILON0 = 0.1
DEFAULT_QUBIT_CAP = 26
DEFAULT_COUNTING_SHOTS = 100
NORM_TOL = 1e-10
# Max complex amplitudes held at once by the dense counting simulation
DENSE_CHUNK_ELEMENTS = 1 << 22

# Classical oracles
KMEANS_MAX_ITERS = 300
KMEANS_N_INIT = 10
INVERSE_POWER_MAX_ITERS = 10_000
INVERSE_POWER_SHIFT = 1e-6
INVERSE_POWER_TOL = 1e-7

# Hill climbing
DEFAULT_RESTARTS = 10
RESTART_SEED_STRIDE = 7919
CLIMB_ITERS_PER_POINT = 4

BACKENDS = ("ideal", "dense")
DATASET_KINDS = ("moons", "blobs", "rings")


def _load_json(path: str) -> dict:
    if os.path.isfile(path):
        try:
            with open(path) as f:
                content = f.read().strip()
                if not content:
                    return {}
                return json.loads(content)
        except json.JSONDecodeError:
            print(f"Warning: {path} contains invalid JSON. Using defaults.", file=sys.stderr)
            return {}
        except OSError:
            return {}
    return {}


def get_config() -> dict:
    """Return the `qspectral` namespace of the user config (empty if absent)."""
    cfg = _load_json(CONFIG_FILE)
    section = cfg.get("qspectral", {})
    return section if isinstance(section, dict) else {}


def resolve_setting(name: str, explicit, default):
    """Explicit value wins, then the config file, then the default."""
    if explicit is not None:
        return explicit
    value = get_config().get(name)
    return default if value is None else value


def resolve_qubit_cap(explicit: int | None = None) -> int:
    """Resolve the dense-backend qubit cap: argument > env var > config > default."""
    if explicit is not None:
        return int(explicit)
    env = os.environ.get(QUBIT_CAP_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            print(f"Warning: {QUBIT_CAP_ENV}={env!r} is not an integer. Ignoring.", file=sys.stderr)
    return int(resolve_setting("qubit_cap", None, DEFAULT_QUBIT_CAP))


def lambda_from_exponent(exponent: int) -> float:
    """Threshold 2**-exponent."""
    return math.ldexp(1.0, -int(exponent))


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0
