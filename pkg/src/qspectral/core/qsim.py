"""Circuit simulation: entangled preparation, QPE with U = exp(2*pi*i*L), threshold Grover, partial trace, counting.

Two backends share one contract:

* ``dense`` holds every amplitude of the (phase, eigenstate, ancilla) registers as an
  array of shape (2**t, N, N). Gates are applied exactly.
* ``ideal`` holds one (phase_value, amplitude) pair per Laplacian eigenvector plus the
  eigenbasis, modelling error-free phase estimation.
"""

from __future__ import annotations

import math
import struct
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import sparse

from qspectral.config import (
    BACKENDS,
    DEFAULT_COUNTING_SHOTS,
    DEFAULT_EPSILON0,
    DENSE_CHUNK_ELEMENTS,
    NORM_TOL,
    resolve_qubit_cap,
)
from qspectral.core.classical import eigen_decompose
from qspectral.core.data_graph import Laplacian
from qspectral.errors import (
    ConfigError,
    CountingAmbiguityError,
    InvalidStateError,
    QubitCapError,
    RescalingError,
)
from qspectral.util.log import get_logger

logger = get_logger("qsim")

# Eigenvalues of a PSD matrix can come back as -1e-16; anything above this rounds to phase 0.
_NEGATIVE_EIGENVALUE_TOL = 1e-12


# ---------------------------------------------------------------------------
# Layout
# ---------------------------------------------------------------------------


def default_t(n: int, epsilon0: float = DEFAULT_EPSILON0) -> int:
    """Phase-register width n + ceil(2 + log2(1/(2*epsilon0)))."""
    if not 0 < epsilon0 < 0.5:
        raise ConfigError(f"epsilon0 must lie in (0, 0.5), got {epsilon0}")
    return n + math.ceil(2 + math.log2(1 / (2 * epsilon0)))


def default_t_prime(n_points: int) -> int:
    """Smallest counting width with 2*pi*sqrt(k_max*N)/2**t' + pi**2*N/2**(2t') < 0.5, k_max = N/4."""
    k_max = max(1, n_points // 4)
    t_prime = 1
    while True:
        m = 2**t_prime
        bound = 2 * math.pi * math.sqrt(k_max * n_points) / m + math.pi**2 * n_points / m**2
        if bound < 0.5:
            return t_prime
        t_prime += 1


@dataclass(frozen=True)
class RegisterLayout:
    t: int
    n: int
    t_prime: int
    epsilon0: float = DEFAULT_EPSILON0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f"eigenstate register needs n >= 1 qubits, got {self.n}")
        if self.t < 1 or self.t_prime < 1:
            raise ConfigError(f"t and t_prime must be >= 1, got t={self.t}, t_prime={self.t_prime}")

    @classmethod
    def for_points(
        cls,
        n_points: int,
        *,
        t: int | None = None,
        t_prime: int | None = None,
        epsilon0: float = DEFAULT_EPSILON0,
    ) -> RegisterLayout:
        """Layout for N = n_points (a power of two), filling unset widths with their defaults."""
        if n_points < 2 or n_points & (n_points - 1):
            raise ConfigError(f"N must be a power of two >= 2, got {n_points}")
        n = n_points.bit_length() - 1
        return cls(
            t=default_t(n, epsilon0) if t is None else t,
            n=n,
            t_prime=default_t_prime(n_points) if t_prime is None else t_prime,
            epsilon0=epsilon0,
        )

    @property
    def n_points(self) -> int:
        return 2**self.n

    @property
    def phase_dim(self) -> int:
        return 2**self.t

    @property
    def qubits(self) -> int:
        """Qubits held by a dense state: phase + eigenstate + ancilla."""
        return self.t + 2 * self.n


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Immutable register state.

    dense: ``amplitudes`` has shape (2**t, N, N); ``phases`` and ``basis`` are None.
    ideal: ``amplitudes`` and ``phases`` have shape (N,); entry i belongs to the
    product |phases[i]>|basis[:, i]>|basis[:, i]>. ``basis`` None means the
    computational basis.
    """

    backend: str
    layout: RegisterLayout
    amplitudes: np.ndarray
    phases: np.ndarray | None = None
    basis: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend '{self.backend}' (expected one of {', '.join(BACKENDS)})")
        n_pts, m = self.layout.n_points, self.layout.phase_dim
        if self.backend == "dense":
            if self.amplitudes.shape != (m, n_pts, n_pts):
                raise InvalidStateError(f"dense amplitudes must have shape {(m, n_pts, n_pts)}, got {self.amplitudes.shape}")
        else:
            if self.amplitudes.shape != (n_pts,) or self.phases is None or self.phases.shape != (n_pts,):
                raise InvalidStateError(f"ideal state needs {n_pts} amplitudes and phases")
            if np.any(self.phases < 0) or np.any(self.phases >= m):
                raise InvalidStateError(f"phase values must lie in [0, {m})")
        norm = float(np.sum(np.abs(self.amplitudes) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state norm {norm:.12f} differs from 1")
        object.__setattr__(self, "amplitudes", _frozen(self.amplitudes))
        if self.phases is not None:
            object.__setattr__(self, "phases", _frozen(self.phases.astype(np.int64)))
        if self.basis is not None:
            object.__setattr__(self, "basis", _frozen(self.basis))

    @property
    def n_points(self) -> int:
        return self.layout.n_points

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def triples(self) -> list[tuple[int, int, complex]]:
        """(phase_value, eigen_index, amplitude) for every stored term of an ideal state."""
        if self.backend != "ideal":
            raise ConfigError("triples are only defined for the ideal backend")
        return [(int(p), i, complex(a)) for i, (p, a) in enumerate(zip(self.phases, self.amplitudes))]

    def basis_matrix(self) -> np.ndarray:
        return np.eye(self.n_points) if self.basis is None else np.asarray(self.basis)

    def with_amplitudes(self, amplitudes: np.ndarray) -> QuantumState:
        return QuantumState(self.backend, self.layout, amplitudes, self.phases, self.basis)

    def to_dense(self) -> QuantumState:
        """Expand an ideal state into the full register vector."""
        if self.backend == "dense":
            return self
        n_pts, basis = self.n_points, self.basis_matrix()
        out = np.zeros((self.layout.phase_dim, n_pts, n_pts), dtype=complex)
        for i, (p, a) in enumerate(zip(self.phases, self.amplitudes)):
            out[p] += a * np.outer(basis[:, i], basis[:, i])
        return QuantumState("dense", self.layout, out)


@dataclass(frozen=True)
class ThresholdOracle:
    """f(x) = 1 iff x / 2**t < lambda_threshold."""

    lambda_threshold: float
    t: int

    def __post_init__(self) -> None:
        if not 0 < self.lambda_threshold <= 1:
            raise ConfigError(f"lambda threshold must lie in (0, 1], got {self.lambda_threshold}")
        if self.t < 1:
            raise ConfigError(f"oracle bit width must be >= 1, got {self.t}")

    def marked_mask(self) -> np.ndarray:
        """Boolean array over all 2**t phase values."""
        x = np.arange(2**self.t)
        return x / 2**self.t < self.lambda_threshold


def classical_f(x: int, oracle: ThresholdOracle) -> int:
    if not 0 <= x < 2**oracle.t:
        raise ConfigError(f"x must be a {oracle.t}-bit integer, got {x}")
    return 1 if x / 2**oracle.t < oracle.lambda_threshold else 0


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    rho: np.ndarray
    hermitian_tol: float = field(default=1e-10, repr=False)
    psd_tol: float = field(default=1e-8, repr=False)

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidStateError(f"density matrix must be square, got shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > self.hermitian_tol:
            raise InvalidStateError("density matrix is not Hermitian")
        tr = np.trace(rho)
        if abs(tr - 1) > self.hermitian_tol:
            raise InvalidStateError(f"density matrix trace {tr.real:.12f} differs from 1")
        low = float(np.min(np.linalg.eigvalsh(rho)))
        if low < -self.psd_tol:
            raise InvalidStateError(f"density matrix has negative eigenvalue {low:.3e}")
        object.__setattr__(self, "rho", _frozen(rho))

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    def real(self) -> np.ndarray:
        return np.real(self.rho)

    def expectation(self, observable: np.ndarray) -> float:
        """tr(rho M) for a Hermitian observable M."""
        return float(np.real(np.trace(self.rho @ observable)))

    def rank(self, tol: float = 1e-8) -> int:
        return int(np.count_nonzero(np.linalg.eigvalsh(self.rho) > tol))


def trace_distance(a: DensityMatrix | np.ndarray, b: DensityMatrix | np.ndarray) -> float:
    """0.5 * sum |eigenvalues(a - b)|."""
    ra = a.rho if isinstance(a, DensityMatrix) else np.asarray(a)
    rb = b.rho if isinstance(b, DensityMatrix) else np.asarray(b)
    diff = ra - rb
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))


# ---------------------------------------------------------------------------
# Step 1: preparation
# ---------------------------------------------------------------------------


def check_qubit_cap(qubits: int, qubit_cap: int | None = None) -> None:
    cap = resolve_qubit_cap(qubit_cap)
    if qubits > cap:
        raise QubitCapError(f"dense simulation needs {qubits} qubits, above the cap of {cap}; use the ideal backend")


def prepare_entangled_state(layout: RegisterLayout, backend: str, *, qubit_cap: int | None = None) -> QuantumState:
    """|0>^t (x) (1/sqrt(N)) sum_i |i>|i>."""
    if backend not in BACKENDS:
        raise ConfigError(f"unknown backend '{backend}' (expected one of {', '.join(BACKENDS)})")
    n_pts = layout.n_points
    if backend == "ideal":
        return QuantumState(
            "ideal",
            layout,
            np.full(n_pts, 1 / math.sqrt(n_pts), dtype=complex),
            np.zeros(n_pts, dtype=np.int64),
        )
    check_qubit_cap(layout.qubits, qubit_cap)
    amps = np.zeros((layout.phase_dim, n_pts, n_pts), dtype=complex)
    amps[0] = np.eye(n_pts) / math.sqrt(n_pts)
    logger.debug("prepared dense state on %d qubits", layout.qubits)
    return QuantumState("dense", layout, amps)


# ---------------------------------------------------------------------------
# Step 2: phase estimation
# ---------------------------------------------------------------------------


def rescaled_matrix(laplacian) -> np.ndarray:
    if isinstance(laplacian, Laplacian):
        return laplacian.rescaled_dense()
    if sparse.issparse(laplacian):
        return laplacian.toarray()
    return np.asarray(laplacian, dtype=float)


def rounded_phases(eigenvalues: np.ndarray, t: int) -> np.ndarray:
    """Nearest t-bit phase value for each eigenvalue, ties rounding up, wrapping at 2**t."""
    lam = np.where((eigenvalues < 0) & (eigenvalues > -_NEGATIVE_EIGENVALUE_TOL), 0.0, eigenvalues)
    return np.floor(lam * 2**t + 0.5).astype(np.int64) % 2**t


def apply_qpe(state: QuantumState, laplacian, layout: RegisterLayout | None = None) -> QuantumState:
    """Phase estimation of U = exp(2*pi*i*L) on the eigenstate register."""
    layout = layout or state.layout
    if layout != state.layout:
        raise ConfigError("layout does not match the state's layout")
    matrix = rescaled_matrix(laplacian)
    if matrix.shape != (layout.n_points, layout.n_points):
        raise ConfigError(f"Laplacian is {matrix.shape[0]}x{matrix.shape[1]}, layout expects N={layout.n_points}")
    spectrum = eigen_decompose(matrix)
    lam, vecs = spectrum.eigenvalues, spectrum.eigenvectors
    if lam[-1] >= 1 or lam[0] < -_NEGATIVE_EIGENVALUE_TOL:
        raise RescalingError(f"rescaled eigenvalues must lie in [0, 1), got range [{lam[0]:.6g}, {lam[-1]:.6g}]")

    if state.backend == "ideal":
        uniform = np.allclose(state.amplitudes, state.amplitudes[0]) and not np.any(state.phases)
        if not uniform:
            raise ConfigError("ideal phase estimation expects the freshly prepared state")
        # Uniform weights over any orthonormal basis give the same entangled state.
        return QuantumState("ideal", layout, state.amplitudes, rounded_phases(lam, layout.t), vecs)

    m = layout.phase_dim
    if np.any(state.amplitudes[1:]):
        raise ConfigError("phase estimation expects the phase register in |0>")
    # Hadamards on the phase register
    amps = np.broadcast_to(state.amplitudes.sum(axis=0) / math.sqrt(m), state.amplitudes.shape).copy()
    # Controlled U^(2^j) for each phase qubit, applied in the eigenbasis of L
    amps = np.matmul(vecs.T, amps)
    x = np.arange(m)
    for j in range(layout.t):
        controlled = (x >> j) & 1 == 1
        amps[controlled] *= np.exp(2j * np.pi * lam * 2**j)[None, :, None]
    amps = np.matmul(vecs, amps)
    # Inverse QFT
    amps = np.fft.fft(amps, axis=0) / math.sqrt(m)
    return QuantumState("dense", layout, amps)


# ---------------------------------------------------------------------------
# Step 3: threshold oracle + Grover
# ---------------------------------------------------------------------------


def _marked(state: QuantumState, oracle: ThresholdOracle) -> np.ndarray:
    """Boolean mask over the leading axis of ``state.amplitudes``."""
    if oracle.t != state.layout.t:
        raise ConfigError(f"oracle acts on {oracle.t} bits but the phase register has {state.layout.t}")
    mask = oracle.marked_mask()
    return mask[state.phases] if state.backend == "ideal" else mask


def _check_compatible(state: QuantumState, psi_pe: QuantumState) -> None:
    if state.backend != psi_pe.backend or state.layout != psi_pe.layout:
        raise ConfigError("state and reference state use different backends or layouts")
    if state.backend == "ideal" and not np.array_equal(state.phases, psi_pe.phases):
        raise ConfigError("state and reference state carry different phase values")


def _reflect(amps: np.ndarray, marked: np.ndarray, psi: np.ndarray) -> np.ndarray:
    v = amps.copy()
    v[marked] *= -1
    return 2 * np.vdot(psi, v) * psi - v


def grover_iteration(state: QuantumState, oracle: ThresholdOracle, psi_pe: QuantumState) -> QuantumState:
    """O_f followed by 2|psi_pe><psi_pe| - I."""
    _check_compatible(state, psi_pe)
    return state.with_amplitudes(_reflect(np.asarray(state.amplitudes), _marked(state, oracle), psi_pe.amplitudes))


def grover_iteration_count(k: int, n_points: int) -> int:
    """r = ceil(pi/4 * sqrt(N/k))."""
    if not 1 <= k <= n_points:
        raise ConfigError(f"k must satisfy 1 <= k <= N = {n_points}, got {k}")
    return math.ceil(math.pi / 4 * math.sqrt(n_points / k))


def grover_run(psi_pe: QuantumState, oracle: ThresholdOracle, r: int) -> QuantumState:
    if r < 0:
        raise ConfigError(f"iteration count must be >= 0, got {r}")
    marked = _marked(psi_pe, oracle)
    psi = psi_pe.amplitudes
    amps = np.asarray(psi)
    for _ in range(r):
        amps = _reflect(amps, marked, psi)
    logger.debug("ran %d Grover iterations (%s backend)", r, psi_pe.backend)
    return psi_pe.with_amplitudes(amps)


def marked_probability(state: QuantumState, oracle: ThresholdOracle) -> float:
    """Probability that the phase register holds a marked value."""
    return float(np.sum(np.abs(state.amplitudes[_marked(state, oracle)]) ** 2))


def grover_angle(k: int, n_points: int) -> float:
    """theta = 2 * arcsin(sqrt(k/N))."""
    if not 0 < k < n_points:
        raise ConfigError(f"Grover angle is degenerate unless 0 < k < N = {n_points}, got k={k}")
    return 2 * math.asin(math.sqrt(k / n_points))


# ---------------------------------------------------------------------------
# Partial trace and measurement
# ---------------------------------------------------------------------------


def reduced_density(state: QuantumState) -> DensityMatrix:
    """Trace out the phase and ancilla registers."""
    if state.backend == "ideal":
        basis = state.basis_matrix()
        rho = (basis * np.abs(state.amplitudes) ** 2) @ basis.T
    else:
        amps = state.amplitudes
        rho = np.einsum("xia,xja->ij", amps, amps.conj())
    return DensityMatrix(rho.astype(complex))


def phase_distribution(state: QuantumState) -> np.ndarray:
    """Probability of each of the 2**t phase-register outcomes."""
    if state.backend == "ideal":
        return np.bincount(state.phases, weights=np.abs(state.amplitudes) ** 2, minlength=state.layout.phase_dim)
    return np.sum(np.abs(state.amplitudes) ** 2, axis=(1, 2))


def measure_phase_register(state: QuantumState, shots: int, seed: int) -> dict[int, int]:
    """Sample the phase register `shots` times; returns {phase_value: count} for observed values."""
    if shots < 1:
        raise ConfigError(f"shots must be >= 1, got {shots}")
    probs = phase_distribution(state)
    counts = np.random.default_rng(seed).multinomial(shots, probs / probs.sum())
    return {int(x): int(c) for x, c in enumerate(counts) if c}


# ---------------------------------------------------------------------------
# Quantum counting
# ---------------------------------------------------------------------------


class CountingResult(NamedTuple):
    k: int
    theta: float


def _fold_theta(y: int, t_prime: int) -> float | None:
    """Angle for counting outcome y; the 2*pi - theta branch folds back, [pi/2, 3pi/2] is ambiguous."""
    theta = 2 * math.pi * y / 2**t_prime
    if theta > 1.5 * math.pi:
        return 2 * math.pi - theta
    if theta >= 0.5 * math.pi:
        return None
    return theta


def _k_from_theta(theta: float, n_points: int) -> int:
    return math.floor(n_points * math.sin(theta / 2) ** 2 + 0.5)


def counting_distribution(
    psi_pe: QuantumState, oracle: ThresholdOracle, t_prime: int, *, qubit_cap: int | None = None
) -> np.ndarray:
    """Outcome probabilities of phase estimation of G on t_prime counting qubits."""
    dense = psi_pe.to_dense()
    check_qubit_cap(t_prime + dense.layout.qubits, qubit_cap)
    m = 2**t_prime
    n_pts = dense.n_points
    psi = np.asarray(dense.amplitudes).ravel()
    marked = np.repeat(_marked(dense, oracle), n_pts * n_pts)
    chunk = max(1, DENSE_CHUNK_ELEMENTS // m)
    probs = np.zeros(m)
    # G^c psi is regenerated for each amplitude chunk so only m * chunk values are held at once.
    for start in range(0, psi.size, chunk):
        stop = min(start + chunk, psi.size)
        block = np.empty((m, stop - start), dtype=complex)
        v = psi
        for c in range(m):
            block[c] = v[start:stop]
            v = _reflect(v, marked, psi)
        probs += np.sum(np.abs(np.fft.fft(block, axis=0) / m) ** 2, axis=1)
    logger.debug("counting distribution over %d outcomes, %d amplitude chunk(s)", m, -(-psi.size // chunk))
    return probs


def quantum_counting(
    psi_pe: QuantumState,
    oracle: ThresholdOracle,
    t_prime: int | None = None,
    backend: str | None = None,
    *,
    shots: int = DEFAULT_COUNTING_SHOTS,
    seed: int = 0,
    qubit_cap: int | None = None,
) -> CountingResult:
    """Estimate the number of marked eigenvectors k = N * sin^2(theta/2)."""
    t_prime = psi_pe.layout.t_prime if t_prime is None else t_prime
    backend = backend or psi_pe.backend
    if backend not in BACKENDS:
        raise ConfigError(f"unknown backend '{backend}' (expected one of {', '.join(BACKENDS)})")
    if t_prime < 1:
        raise ConfigError(f"t_prime must be >= 1, got {t_prime}")
    n_pts = psi_pe.n_points
    m = 2**t_prime
    ambiguous = f"counting estimate is ambiguous at t_prime={t_prime}; increase t_prime"

    if backend == "ideal":
        p = min(1.0, max(0.0, marked_probability(psi_pe, oracle)))
        y = math.floor(2 * math.asin(math.sqrt(p)) / (2 * math.pi) * m + 0.5) % m
        theta = _fold_theta(y, t_prime)
        if theta is None:
            raise CountingAmbiguityError(ambiguous)
        return CountingResult(_k_from_theta(theta, n_pts), theta)

    if shots < 1:
        raise ConfigError(f"shots must be >= 1, got {shots}")
    probs = counting_distribution(psi_pe, oracle, t_prime, qubit_cap=qubit_cap)
    outcomes = np.random.default_rng(seed).choice(m, size=shots, p=probs / probs.sum())
    by_k: dict[int, Counter] = {}
    for y in outcomes:
        theta = _fold_theta(int(y), t_prime)
        if theta is not None:
            by_k.setdefault(_k_from_theta(theta, n_pts), Counter())[theta] += 1
    if not by_k:
        raise CountingAmbiguityError(ambiguous)
    k = max(by_k, key=lambda kk: (sum(by_k[kk].values()), -kk))
    theta = by_k[k].most_common(1)[0][0]
    logger.info("counting: k=%d from %d/%d unambiguous shots", k, sum(by_k[k].values()), shots)
    return CountingResult(k, theta)


# ---------------------------------------------------------------------------
# Debug dumps
# ---------------------------------------------------------------------------

_DENSE_HEADER = struct.Struct("<II")


def dump_state(state: QuantumState, path: str) -> None:
    """Ideal: text lines "phase_int,eigen_index,re,im". Dense: uint32 (t, n) header + complex128 amplitudes."""
    if state.backend == "ideal":
        with open(path, "w") as f:
            f.write(f"# t={state.layout.t} n={state.layout.n}\n")
            for p, i, a in state.triples():
                f.write(f"{p},{i},{a.real!r},{a.imag!r}\n")
        return
    with open(path, "wb") as f:
        f.write(_DENSE_HEADER.pack(state.layout.t, state.layout.n))
        f.write(np.ascontiguousarray(state.amplitudes, dtype="<c16").tobytes())


def load_state(path: str, *, basis: np.ndarray | None = None) -> QuantumState:
    """Inverse of dump_state. Ideal dumps do not carry the eigenbasis; pass it back in via ``basis``."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw.startswith(b"#"):
        lines = raw.decode().splitlines()
        fields = dict(tok.split("=") for tok in lines[0].lstrip("#").split())
        layout = RegisterLayout.for_points(2 ** int(fields["n"]), t=int(fields["t"]))
        rows = [line.split(",") for line in lines[1:] if line.strip()]
        phases = np.zeros(layout.n_points, dtype=np.int64)
        amps = np.zeros(layout.n_points, dtype=complex)
        for p, i, re, im in rows:
            phases[int(i)] = int(p)
            amps[int(i)] = complex(float(re), float(im))
        return QuantumState("ideal", layout, amps, phases, basis)
    if len(raw) < _DENSE_HEADER.size:
        raise ConfigError(f"{path}: truncated state dump")
    t, n = _DENSE_HEADER.unpack_from(raw)
    layout = RegisterLayout.for_points(2**n, t=t)
    amps = np.frombuffer(raw, dtype="<c16", offset=_DENSE_HEADER.size)
    if amps.size != layout.phase_dim * layout.n_points**2:
        raise ConfigError(f"{path}: expected {layout.phase_dim * layout.n_points ** 2} amplitudes, found {amps.size}")
    return QuantumState("dense", layout, amps.reshape(layout.phase_dim, layout.n_points, layout.n_points))
