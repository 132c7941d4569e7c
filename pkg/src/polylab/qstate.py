"""Qubit-register states: pure vectors, density matrices, reductions and sampling.

Index convention (used everywhere in polylab): little-endian.  Qubit ``k``
is bit ``k`` of the computational-basis index, so for a two-qubit vector the
amplitude order is ``|q1 q0> = 00, 01, 10, 11`` with qubit 0 varying fastest.
When a density matrix carries ``qubit_labels``, the label at position ``p``
plays the role of qubit ``p``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .exceptions import DimensionError, InvalidPartitionError, InvalidStateError

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
EIG_CLIP = 1e-10
# eigenvalues at or below this are treated as absent when counting rank
RANK_TOL = 1e-13


def _n_qubits_for(dim: int) -> int:
    n = int(round(math.log2(dim))) if dim > 0 else -1
    if n < 0 or 2**n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


def clip_spectrum(eigs: np.ndarray) -> np.ndarray:
    """Clip roundoff-negative eigenvalues to zero and renormalize to unit sum.

    Values below ``-EIG_CLIP`` mean the operator is not positive semidefinite
    and raise :class:`InvalidStateError`.
    """
    eigs = np.asarray(eigs, dtype=float)
    if eigs.size and eigs.min() < -EIG_CLIP:
        raise InvalidStateError(f"negative eigenvalue {eigs.min():.3e} below -{EIG_CLIP}")
    eigs = np.where(eigs < 0.0, 0.0, eigs)
    total = eigs.sum()
    if total <= 0.0:
        raise InvalidStateError("spectrum sums to zero")
    return eigs / total


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector on ``n_qubits`` qubits.

    The amplitudes are normalized on construction and stored read-only.
    """

    amplitudes: np.ndarray
    n_qubits: int = field(init=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = _n_qubits_for(amps.size)
        if n < 1:
            raise DimensionError("a pure state needs at least one qubit")
        norm = np.linalg.norm(amps)
        if not np.isfinite(norm) or norm == 0.0:
            raise InvalidStateError("zero or non-finite amplitude vector")
        amps = amps / norm
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "n_qubits", n)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(range(self.n_qubits))

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.labels)

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __repr__(self):
        return f"PureState(n_qubits={self.n_qubits})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix over labeled qubits.

    The input is symmetrized ``(M + M^H) / 2``; tiny negative eigenvalues are
    tolerated (see :func:`clip_spectrum`) but larger violations raise.
    """

    matrix: np.ndarray
    qubit_labels: tuple = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got shape {m.shape}")
        n = _n_qubits_for(m.shape[0])
        if n < 1:
            raise DimensionError("a density matrix needs at least one qubit")
        if not np.all(np.isfinite(m)):
            raise InvalidStateError("non-finite matrix entries")
        if np.abs(m - m.conj().T).max() > 1e-8:
            # symmetrization absorbs roundoff, not genuinely non-Hermitian input
            raise InvalidStateError("matrix is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace {tr!r} differs from 1")
        labels = tuple(range(n)) if self.qubit_labels is None else tuple(self.qubit_labels)
        if len(labels) != n or len(set(labels)) != n:
            raise InvalidStateError(f"need {n} distinct qubit labels, got {labels!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "qubit_labels", labels)
        # validates positivity eagerly
        self.eigh

    @property
    def n_qubits(self) -> int:
        return len(self.qubit_labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def labels(self) -> tuple:
        return self.qubit_labels

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Clipped ascending spectrum and matching eigenvectors (columns)."""
        w, v = np.linalg.eigh(self.matrix)
        w = clip_spectrum(w)
        w.setflags(write=False)
        v.setflags(write=False)
        return w, v

    @property
    def spectrum(self) -> np.ndarray:
        return self.eigh[0]

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.spectrum > RANK_TOL))

    def purity(self) -> float:
        return float(np.sum(self.spectrum**2))

    def sqrtm(self) -> np.ndarray:
        w, v = self.eigh
        return (v * np.sqrt(w)) @ v.conj().T

    def factor(self) -> np.ndarray:
        """``Phi`` with ``rho = Phi Phi^H``: columns ``sqrt(l_j) e_j`` for ``l_j > RANK_TOL``.

        Dropping roundoff-level eigenvalues keeps square-root based quantities
        from picking up ``sqrt(eps)`` noise.
        """
        w, v = self.eigh
        keep = w > RANK_TOL
        return v[:, keep] * np.sqrt(w[keep])

    def position(self, label) -> int:
        try:
            return self.qubit_labels.index(label)
        except ValueError:
            raise InvalidPartitionError(f"unknown qubit label {label!r}") from None

    def __repr__(self):
        return f"DensityMatrix(labels={self.qubit_labels})"


State = Union[PureState, DensityMatrix]


@dataclass(frozen=True)
class Bipartition:
    """Split of ``n`` qubits into two nonempty complementary sides."""

    side_a: frozenset
    side_b: frozenset

    def __post_init__(self):
        a, b = frozenset(self.side_a), frozenset(self.side_b)
        if not a or not b:
            raise InvalidPartitionError("both sides of a bipartition must be nonempty")
        if a & b:
            raise InvalidPartitionError(f"sides overlap on {sorted(a & b)}")
        object.__setattr__(self, "side_a", a)
        object.__setattr__(self, "side_b", b)

    @classmethod
    def of(cls, labels: Iterable, side_a: Iterable) -> "Bipartition":
        labels = list(labels)
        side_a = frozenset(side_a)
        unknown = side_a - set(labels)
        if unknown:
            raise InvalidPartitionError(f"unknown qubits {sorted(unknown)}")
        return cls(side_a, frozenset(labels) - side_a)

    def covers(self, labels: Iterable) -> bool:
        return (self.side_a | self.side_b) == frozenset(labels)


def _labels_of(state: State) -> tuple:
    return state.labels


def _check_keep(labels: Sequence, keep: Iterable) -> list:
    keep = set(keep)
    unknown = keep - set(labels)
    if unknown:
        raise InvalidPartitionError(f"unknown qubits {sorted(unknown, key=repr)}")
    if not keep or len(keep) == len(labels):
        raise InvalidPartitionError("keep must be a nonempty proper subset of the qubits")
    return [p for p, lab in enumerate(labels) if lab in keep]


def _split_amplitudes(amps: np.ndarray, n: int, rows: list[int]) -> np.ndarray:
    """Reshape a state vector into a matrix with ``rows`` positions as the row index.

    Both the row and the column index stay little-endian in their own qubits.
    """
    cols = [p for p in range(n) if p not in rows]
    # C-order tensor axis a holds position n - 1 - a
    tensor = amps.reshape((2,) * n)
    axes = [n - 1 - p for p in reversed(rows)] + [n - 1 - p for p in reversed(cols)]
    return tensor.transpose(axes).reshape(2 ** len(rows), 2 ** len(cols))


def partial_trace(state: State, keep: Iterable) -> DensityMatrix:
    """Reduced state on the qubits in ``keep`` (labels), tracing out the rest.

    Kept qubits retain their relative order, so the result is little-endian in
    the kept labels.
    """
    labels = _labels_of(state)
    positions = _check_keep(labels, keep)
    out_labels = tuple(labels[p] for p in positions)
    n = len(labels)
    if isinstance(state, PureState):
        mat = _split_amplitudes(state.amplitudes, n, positions)
        return DensityMatrix(mat @ mat.conj().T, out_labels)

    traced = [p for p in range(n) if p not in positions]
    tensor = state.matrix.reshape((2,) * (2 * n))
    row_axes = [n - 1 - p for p in reversed(positions)] + [n - 1 - p for p in reversed(traced)]
    col_axes = [n + a for a in row_axes]
    dk, dt = 2 ** len(positions), 2 ** len(traced)
    t = tensor.transpose(row_axes + col_axes).reshape(dk, dt, dk, dt)
    return DensityMatrix(np.einsum("ijkj->ik", t), out_labels)


def schmidt_coeffs(state: PureState, cut: Bipartition) -> np.ndarray:
    """Schmidt coefficients across ``cut``, in descending order."""
    labels = state.labels
    if not cut.covers(labels):
        raise InvalidPartitionError("bipartition does not cover the state's qubits")
    positions = _check_keep(labels, cut.side_a)
    mat = _split_amplitudes(state.amplitudes, state.n_qubits, positions)
    return np.linalg.svd(mat, compute_uv=False)


def purify(rho: DensityMatrix) -> PureState:
    """Purification of ``rho`` on system + ancilla.

    The system occupies qubits ``0..n-1`` and the ancilla the next
    ``ceil(log2(rank))`` qubits; ``|psi> = sum_j sqrt(l_j) |e_j>|j>``.  For a
    pure input the ancilla is one-dimensional and no qubits are added.
    """
    w, v = rho.eigh
    keep = w > RANK_TOL
    w, v = w[keep][::-1], v[:, keep][:, ::-1]
    r = w.size
    n_anc = max(0, math.ceil(math.log2(r))) if r > 1 else 0
    block = np.zeros((2**n_anc, rho.dim), dtype=complex)
    block[:r] = (v * np.sqrt(w)).T
    # flat index = sys + 2**n * anc
    return PureState(block.reshape(-1))


def fidelity_root_sum(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Sum of the eigenvalues of ``sqrt(sqrt(rho) sigma sqrt(rho))``.

    Computed as the trace norm of ``A^H B`` for factors ``rho = A A^H`` and
    ``sigma = B B^H``, which is the same number without a matrix square root.
    """
    if rho.dim != sigma.dim:
        raise DimensionError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    return float(np.sum(np.linalg.svd(rho.factor().conj().T @ sigma.factor(), compute_uv=False)))


# -- sampling -----------------------------------------------------------------

RNG_ALGORITHM = "numpy.random.Generator(PCG64)"


def make_rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def haar_random_pure(n_qubits: int, rng: np.random.Generator) -> PureState:
    """Haar-distributed pure state: a normalized complex Gaussian vector."""
    if n_qubits < 1:
        raise DimensionError("n_qubits must be >= 1")
    return PureState(_complex_normal(rng, 2**n_qubits))


def random_mixed(n_qubits: int, rank: int, rng: np.random.Generator) -> DensityMatrix:
    """Induced-measure mixed state: trace of a Haar state on system x rank-dim ancilla."""
    dim = 2**n_qubits
    if not 1 <= rank <= dim:
        raise DimensionError(f"rank must lie in [1, {dim}], got {rank}")
    g = _complex_normal(rng, (dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


# -- named states ---------------------------------------------------------------


def basis_state(bits: Sequence[int]) -> PureState:
    """Product state with ``bits[k]`` on qubit ``k``."""
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[sum(int(b) << k for k, b in enumerate(bits))] = 1.0
    return PureState(amps)


def ghz(n: int = 3) -> PureState:
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = amps[-1] = 1.0
    return PureState(amps)


def w_state(n: int = 3) -> PureState:
    amps = np.zeros(2**n, dtype=complex)
    for k in range(n):
        amps[1 << k] = 1.0
    return PureState(amps)


def bell() -> PureState:
    """(|00> + |11>) / sqrt(2)."""
    return ghz(2)


def werner(p: float) -> DensityMatrix:
    """``p |Phi+><Phi+| + (1 - p) I/4``."""
    phi = bell().amplitudes
    return DensityMatrix(p * np.outer(phi, phi.conj()) + (1 - p) * np.eye(4) / 4)


def maximally_mixed(n: int) -> DensityMatrix:
    return DensityMatrix(np.eye(2**n, dtype=complex) / 2**n)


# -- JSON I/O -------------------------------------------------------------------


def _pairs(z: np.ndarray) -> list:
    return [[float(c.real), float(c.imag)] for c in z]


def _complex_from(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.shape[-1] != 2:
        raise InvalidStateError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def state_to_json(state: State) -> dict:
    if isinstance(state, PureState):
        return {"n_qubits": state.n_qubits, "amplitudes": _pairs(state.amplitudes)}
    return {
        "labels": list(state.qubit_labels),
        "matrix": [_pairs(row) for row in state.matrix],
    }


def state_from_json(obj: dict) -> State:
    """Parse either JSON state layout (see :func:`state_to_json`)."""
    if "amplitudes" in obj:
        psi = PureState(_complex_from(obj["amplitudes"]))
        if "n_qubits" in obj and int(obj["n_qubits"]) != psi.n_qubits:
            raise InvalidStateError("n_qubits does not match the amplitude count")
        return psi
    if "matrix" in obj:
        labels = obj.get("labels")
        return DensityMatrix(_complex_from(obj["matrix"]), None if labels is None else tuple(labels))
    raise InvalidStateError("state JSON needs an 'amplitudes' or a 'matrix' key")


def load_state(path) -> State:
    with open(Path(path)) as fh:
        return state_from_json(json.load(fh))


def save_state(state: State, path) -> None:
    with open(Path(path), "w") as fh:
        json.dump(state_to_json(state), fh)
