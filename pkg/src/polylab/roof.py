"""Convex-roof (minimum) and assistance (maximum) averages over decompositions.

Every pure-state decomposition of a rank-``r`` state ``rho`` with ``k``
members arises from a ``k x r`` isometry ("mixer") applied to the
square-root eigen-ensemble ``sqrt(l_j) |e_j>``.  :func:`roof_optimize`
searches that set with a seeded multi-start local search:

* restart 0 starts from the eigendecomposition itself, so the result is
  never worse than the eigen-ensemble average;
* later restarts start from ``exp(A)[:, :r]`` with ``A`` a random
  skew-Hermitian ``k x k`` matrix;
* each start is improved by pairwise rotations (see ``polylab._core``).

A minimization returns an upper estimate of the true roof; a
maximization returns a lower estimate.  Nothing here certifies global
optimality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.linalg import expm

from . import _core
from .entropy import RENYI, TSALLIS, VON_NEUMANN, QSParams, unified_entropy
from .exceptions import DimensionError, PolylabError
from .qstate import RANK_TOL, DensityMatrix, PureState, partial_trace
from .twoqubit import concurrence_pure

MIN = "min"
MAX = "max"
MAX_DEFAULT_CARDINALITY = 16
WEIGHT_DROP = 1e-14
ISOMETRY_TOL = 1e-10


class RoofError(PolylabError, ValueError):
    """Bad mixer or optimizer configuration."""


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Weighted pure states ``{(p_i, psi_i)}`` with ``sum p_i = 1``."""

    entries: tuple

    def __post_init__(self):
        entries = tuple((float(w), psi) for w, psi in self.entries)
        if not entries:
            raise RoofError("empty decomposition")
        weights = np.array([w for w, _ in entries])
        if np.any(weights <= 0):
            raise RoofError("decomposition weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-10:
            raise RoofError(f"weights sum to {weights.sum()!r}, not 1")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.entries])

    @property
    def states(self) -> list[PureState]:
        return [psi for _, psi in self.entries]

    def mixture(self) -> np.ndarray:
        return sum(w * np.outer(psi.amplitudes, psi.amplitudes.conj()) for w, psi in self.entries)

    def reconstruction_error(self, rho: DensityMatrix) -> float:
        return float(np.abs(self.mixture() - rho.matrix).max())

    def average(self, payoff: Callable[[PureState], float]) -> float:
        return float(sum(w * payoff(psi) for w, psi in self.entries))


@dataclass(frozen=True)
class RoofConfig:
    """Search settings for :func:`roof_optimize`.

    ``cardinality=None`` uses ``k = min(r**2, 16)`` (but never below ``r``).
    ``max_iters`` counts full pair sweeps per restart.
    """

    cardinality: int | None = None
    restarts: int = 32
    max_iters: int = 2000
    step_tol: float = 1e-8
    value_tol: float = 1e-10
    seed: int = 0
    initial_step: float = 0.3
    backend: str | None = None

    def __post_init__(self):
        if self.restarts < 1:
            raise RoofError("restarts must be >= 1")
        if self.max_iters < 1:
            raise RoofError("max_iters must be >= 1")
        if self.cardinality is not None and self.cardinality < 1:
            raise RoofError("cardinality must be >= 1")
        if not (self.step_tol > 0 and self.initial_step > self.step_tol):
            raise RoofError("need 0 < step_tol < initial_step")

    def resolve_cardinality(self, rank: int) -> int:
        if self.cardinality is None:
            return max(rank, min(rank * rank, MAX_DEFAULT_CARDINALITY))
        if self.cardinality < rank:
            raise RoofError(f"cardinality {self.cardinality} is below the rank {rank}")
        return self.cardinality

    def to_dict(self) -> dict:
        return {
            "cardinality": self.cardinality,
            "restarts": self.restarts,
            "max_iters": self.max_iters,
            "step_tol": self.step_tol,
            "value_tol": self.value_tol,
            "seed": self.seed,
            "initial_step": self.initial_step,
        }


@dataclass(frozen=True, eq=False)
class RoofResult:
    value: float
    decomposition: Decomposition
    converged: bool
    restarts_used: int
    direction: str
    cardinality: int
    history: tuple = field(default=())
    backend: str = _core.BACKEND

    @property
    def bound(self) -> str:
        """Which side of the true optimum ``value`` lies on."""
        return "upper" if self.direction == MIN else "lower"

    def metadata(self) -> dict:
        return {
            "direction": self.direction,
            "bound": self.bound,
            "cardinality": self.cardinality,
            "cardinality_rule": "min(rank^2, 16) unless configured",
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "backend": self.backend,
        }


@dataclass(frozen=True)
class MarginalPayoff:
    """Pure-state payoff that depends only on one qubit's reduced state.

    ``measure`` is ``"concurrence"`` (``2 sqrt(det rho_A)``) or ``"entropy"``
    (unified-(q, s) entropy of ``rho_A``).  ``position`` is the qubit's
    position in the state vector (little-endian).  These payoffs run on the
    compiled kernels.
    """

    measure: str
    params: QSParams | None = None
    position: int = 0

    def __post_init__(self):
        if self.measure not in ("concurrence", "entropy"):
            raise RoofError(f"unknown marginal measure {self.measure!r}")
        if self.measure == "entropy" and self.params is None:
            raise RoofError("entropy payoff needs (q, s) parameters")

    def __call__(self, psi: PureState) -> float:
        if self.measure == "concurrence":
            from .qstate import Bipartition

            return concurrence_pure(psi, Bipartition.of(psi.labels, {self.position}))
        return unified_entropy(partial_trace(psi, {self.position}), self.params)

    def kernel_args(self) -> tuple[int, float, float]:
        if self.measure == "concurrence":
            return _core.KIND_CONCURRENCE, 0.0, 0.0
        regime = self.params.regime
        kind = {
            VON_NEUMANN: _core.KIND_VON_NEUMANN,
            RENYI: _core.KIND_RENYI,
            TSALLIS: _core.KIND_TSALLIS,
        }.get(regime, _core.KIND_UNIFIED)
        return kind, self.params.q, self.params.s


Payoff = Union[MarginalPayoff, Callable[[PureState], float]]


def _eigen_ensemble(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Descending nonzero eigenvalues and the matching eigenvectors (columns)."""
    w, v = rho.eigh
    keep = w > RANK_TOL
    return w[keep][::-1], v[:, keep][:, ::-1]


def decomposition_from_mixer(rho: DensityMatrix, mixer: np.ndarray) -> Decomposition:
    """Decomposition with members ``sum_j mixer[i, j] sqrt(l_j) |e_j>``.

    ``(l_j, |e_j>)`` are the nonzero eigenpairs of ``rho`` in descending
    order; ``mixer`` must be ``k x r`` with orthonormal columns.  Members with
    weight below 1e-14 are dropped.
    """
    lam, vecs = _eigen_ensemble(rho)
    mixer = np.asarray(mixer, dtype=complex)
    if mixer.ndim != 2 or mixer.shape[1] != lam.size:
        raise DimensionError(f"mixer must have {lam.size} columns (the rank), got shape {mixer.shape}")
    if np.abs(mixer.conj().T @ mixer - np.eye(lam.size)).max() > ISOMETRY_TOL:
        raise RoofError("mixer columns are not orthonormal")
    rows = mixer @ (vecs * np.sqrt(lam)).T
    return _decomposition_from_rows(rows)


def _decomposition_from_rows(rows: np.ndarray) -> Decomposition:
    weights = np.einsum("ij,ij->i", rows.conj(), rows).real
    keep = weights >= WEIGHT_DROP
    entries = [(w, PureState(row)) for w, row in zip(weights[keep], rows[keep])]
    total = sum(w for w, _ in entries)
    return Decomposition(tuple((w / total, psi) for w, psi in entries))


def random_mixer(k: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """First ``r`` columns of ``exp(A)`` with ``A`` random skew-Hermitian."""
    h = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    return expm(0.5j * (h + h.conj().T))[:, :r]


def _restart_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _to_focus_major(rows: np.ndarray, n: int, position: int) -> np.ndarray:
    t = rows.reshape((rows.shape[0],) + (2,) * n)
    t = np.moveaxis(t, 1 + (n - 1 - position), 1)
    return np.ascontiguousarray(t.reshape(rows.shape[0], -1))


def _from_focus_major(rows: np.ndarray, n: int, position: int) -> np.ndarray:
    t = rows.reshape((rows.shape[0],) + (2,) * n)
    t = np.moveaxis(t, 1, 1 + (n - 1 - position))
    return np.ascontiguousarray(t.reshape(rows.shape[0], -1))


def _as_density(rho) -> DensityMatrix:
    return rho.density() if isinstance(rho, PureState) else rho


def roof_optimize(rho, payoff: Payoff, direction: str = MIN,
                  config: RoofConfig | None = None) -> RoofResult:
    """Best average ``sum_i p_i payoff(psi_i)`` found over decompositions of ``rho``.

    ``direction="min"`` gives the convex roof estimate (an upper bound on the
    true minimum), ``"max"`` the assistance estimate (a lower bound on the
    true maximum).  Deterministic for a fixed ``config.seed``.
    """
    if direction not in (MIN, MAX):
        raise RoofError(f"direction must be 'min' or 'max', got {direction!r}")
    config = config or RoofConfig()
    rho = _as_density(rho)
    if isinstance(payoff, MarginalPayoff):
        if rho.n_qubits < 2:
            raise DimensionError("marginal payoffs need at least two qubits")
        if not 0 <= payoff.position < rho.n_qubits:
            raise DimensionError(f"payoff position {payoff.position} out of range")
    lam, vecs = _eigen_ensemble(rho)
    r = lam.size

    if r == 1:
        psi = PureState(vecs[:, 0])
        value = float(payoff(psi))
        return RoofResult(value, Decomposition(((1.0, psi),)), True, 1, direction, 1, (value,))

    k = config.resolve_cardinality(r)
    sign = -1.0 if direction == MIN else 1.0
    base = (vecs * np.sqrt(lam)).T  # r x d, row j = sqrt(l_j) e_j
    n = rho.n_qubits

    if isinstance(payoff, MarginalPayoff):
        kern = _core.get_kernels(config.backend)
        kind, q, s = payoff.kernel_args()
        base = _to_focus_major(base, n, payoff.position)

        def run(V):
            return kern.sweep_marginal(V, kind, q, s, sign, config.initial_step,
                                       config.step_tol, config.value_tol, config.max_iters)
        backend = "cython" if kern is _core.native else "python"
    else:
        evaluator = _core.fallback.CallablePairs(lambda u: payoff(PureState(u)))

        def run(V):
            return _core.fallback.sweep(V, evaluator, sign, config.initial_step,
                                        config.step_tol, config.value_tol, config.max_iters)
        backend = "python"

    best = None
    history = []
    for index in range(config.restarts):
        if index == 0:
            mixer = np.eye(k, r, dtype=complex)
        else:
            mixer = random_mixer(k, r, _restart_rng(config.seed, index))
        V = np.ascontiguousarray(mixer @ base)
        value, _, converged = run(V)
        # strict improvement keeps the lowest restart index on ties
        if best is None or sign * value > sign * best[0]:
            best = (value, V, converged)
        history.append(best[0])

    value, V, converged = best
    if isinstance(payoff, MarginalPayoff):
        V = _from_focus_major(V, n, payoff.position)
    return RoofResult(float(value), _decomposition_from_rows(V), bool(converged),
                      config.restarts, direction, k, tuple(history), backend)


# -- named measures -------------------------------------------------------------


def _focus_position(rho: DensityMatrix, focus) -> int:
    return 0 if focus is None else rho.position(focus)


def _marginal_roof(rho, measure, params, direction, config, focus) -> RoofResult:
    rho = _as_density(rho)
    payoff = MarginalPayoff(measure, params, _focus_position(rho, focus))
    return roof_optimize(rho, payoff, direction, config)


def unified_entanglement(rho, params: QSParams, config: RoofConfig | None = None, focus=None) -> float:
    """Convex-roof unified-(q, s) entanglement across ``focus | rest`` (default: first qubit)."""
    return _marginal_roof(rho, "entropy", params, MIN, config, focus).value


def ueoa(rho, params: QSParams, config: RoofConfig | None = None, focus=None) -> float:
    """Unified-(q, s) entanglement of assistance estimate (lower bound)."""
    return _marginal_roof(rho, "entropy", params, MAX, config, focus).value


def eof(rho, config: RoofConfig | None = None, focus=None) -> float:
    """Entanglement of formation, in nats."""
    return _marginal_roof(rho, "entropy", QSParams(1.0, 1.0), MIN, config, focus).value


def eoa(rho, config: RoofConfig | None = None, focus=None) -> float:
    """Entanglement of assistance, in nats."""
    return _marginal_roof(rho, "entropy", QSParams(1.0, 1.0), MAX, config, focus).value


def teoa(rho, q: float, config: RoofConfig | None = None, focus=None) -> float:
    """Tsallis-q entanglement of assistance."""
    return _marginal_roof(rho, "entropy", QSParams(q, 1.0), MAX, config, focus).value


def coa(rho, config: RoofConfig | None = None, focus=None) -> float:
    """Concurrence of assistance (roof maximum of the pure-state concurrence)."""
    return _marginal_roof(rho, "concurrence", None, MAX, config, focus).value


def concurrence_roof(rho, config: RoofConfig | None = None, focus=None) -> float:
    """Convex-roof concurrence (roof minimum); compare with the Wootters formula."""
    return _marginal_roof(rho, "concurrence", None, MIN, config, focus).value
