"""Exact two-qubit layer: spin flip, Wootters concurrence, CoA and the f_{q,s} family.

``f_qs`` maps concurrence to unified-(q, s) entanglement for two-qubit states
(and for any bipartite pure state of Schmidt rank two) when ``q >= 1``,
``0 <= s <= 1`` and ``q s <= 3``.  The same function turns the analytic
concurrence of assistance into a lower bound on the unified entanglement of
assistance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .entropy import EPS_LIMIT, QSParams, unified_entropy
from .exceptions import DimensionError, DomainError
from .qstate import Bipartition, DensityMatrix, PureState, partial_trace

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SIGMA_YY = np.kron(SIGMA_Y, SIGMA_Y)

# concurrences a hair above 1 (or below 0) are roundoff
_X_SLACK = 1e-12


def _exact(v: float) -> Fraction:
    return Fraction(float(v))


@dataclass(frozen=True)
class FRange:
    """Domain flags for ``(q, s)``, evaluated exactly on the binary float values.

    ``valid_functional``: ``q >= 1``, ``0 <= s <= 1``, ``q s <= 3``.
    ``valid_lemma2``: ``1 <= q <= 2`` and ``-q^2 + 4q - 3 <= s <= 1``.
    """

    q: float
    s: float

    @property
    def valid_functional(self) -> bool:
        q, s = _exact(self.q), _exact(self.s)
        return q >= 1 and 0 <= s <= 1 and q * s <= 3

    @property
    def valid_lemma2(self) -> bool:
        q, s = _exact(self.q), _exact(self.s)
        return 1 <= q <= 2 and -q * q + 4 * q - 3 <= s <= 1

    def functional_violation(self) -> str | None:
        q, s = _exact(self.q), _exact(self.s)
        if q < 1:
            return "q >= 1"
        if s < 0:
            return "s >= 0"
        if s > 1:
            return "s <= 1"
        if q * s > 3:
            return "q*s <= 3"
        return None

    def lemma2_violation(self) -> str | None:
        q, s = _exact(self.q), _exact(self.s)
        if q < 1:
            return "q >= 1"
        if q > 2:
            return "q <= 2"
        if s > 1:
            return "s <= 1"
        if s < -q * q + 4 * q - 3:
            return "-q^2 + 4q - 3 <= s"
        return None

    def require_functional(self) -> None:
        # q within EPS_LIMIT below 1 is the von Neumann limit, not an extrapolation
        if abs(self.q - 1.0) < EPS_LIMIT and 0 <= self.s <= 1:
            return
        bad = self.functional_violation()
        if bad:
            raise DomainError(f"(q, s) = ({self.q}, {self.s}) violates {bad}", bad)

    def require_lemma2(self) -> None:
        bad = self.lemma2_violation()
        if bad:
            raise DomainError(f"(q, s) = ({self.q}, {self.s}) violates {bad}", bad)


def _require_two_qubit(rho: DensityMatrix) -> None:
    if rho.dim != 4:
        raise DimensionError(f"expected a two-qubit state, got dimension {rho.dim}")


def spin_flip(rho: DensityMatrix) -> DensityMatrix:
    """``(sigma_y x sigma_y) rho^* (sigma_y x sigma_y)`` in the computational basis."""
    _require_two_qubit(rho)
    return DensityMatrix(SIGMA_YY @ rho.matrix.conj() @ SIGMA_YY, rho.qubit_labels)


def wootters_spectrum(rho: DensityMatrix) -> np.ndarray:
    """Descending eigenvalues of ``sqrt(sqrt(rho) rho~ sqrt(rho))``.

    With ``rho = Phi Phi^H`` these are the singular values of the ``r x r``
    matrix ``Phi^T (sigma_y x sigma_y) Phi`` padded with zeros, so rank
    deficiency gives exact zeros instead of ``sqrt(eps)`` noise.
    """
    _require_two_qubit(rho)
    phi = rho.factor()
    lam = np.zeros(4)
    lam[: phi.shape[1]] = np.linalg.svd(phi.T @ SIGMA_YY @ phi, compute_uv=False)
    return lam


def concurrence_wootters(rho: DensityMatrix) -> float:
    lam = wootters_spectrum(rho)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def coa_analytic(rho: DensityMatrix) -> float:
    """Concurrence of assistance: the sum of the Wootters spectrum.

    Equals ``fidelity_root_sum(rho, spin_flip(rho))``.
    """
    return float(min(1.0, np.sum(wootters_spectrum(rho))))


def concurrence_pure(psi: PureState, cut: Bipartition | None = None) -> float:
    """``sqrt(2 (1 - tr rho_A^2))``; the default cut isolates qubit 0."""
    side_a = {0} if cut is None else cut.side_a
    rho_a = partial_trace(psi, side_a)
    return float(np.sqrt(max(0.0, 2.0 * (1.0 - rho_a.purity()))))


def _theta_xi(x):
    root = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    theta = 1.0 + root
    # x^2 / Theta == 1 - sqrt(1 - x^2) without cancellation at small x
    return theta, x * x / theta


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < -_X_SLACK) or np.any(x > 1.0 + _X_SLACK) or np.any(~np.isfinite(x)):
        raise DomainError("argument must lie in [0, 1]", "0 <= x <= 1")
    return np.clip(x, 0.0, 1.0)


def _binary_entropy(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(p > 0, -p * np.log(p), 0.0)
        b = np.where(p < 1, -(1.0 - p) * np.log1p(-p), 0.0)
    return a + b


def f_raw(x, q: float, s: float):
    """The f_{q,s} closed form without domain checks (vectorized)."""
    x = np.asarray(x, dtype=float)
    theta, xi = _theta_xi(x)
    if abs(q - 1.0) < EPS_LIMIT:
        return _binary_entropy(xi / 2.0)
    # (Theta^q + Xi^q) / 2^q, with 0^q = 0
    with np.errstate(divide="ignore"):
        inner = (theta / 2.0) ** q + np.where(xi > 0, (xi / 2.0) ** q, 0.0)
    if abs(s) < EPS_LIMIT:
        return np.log(inner) / (1.0 - q)
    return np.expm1(s * np.log(inner)) / ((1.0 - q) * s)


def f_qs(x, q: float, s: float):
    """f_{q,s}(x) on ``0 <= x <= 1`` for ``q >= 1, 0 <= s <= 1, q s <= 3``.

    At ``|q - 1| < EPS_LIMIT`` the limit :func:`calE` is returned.  Scalars
    in give a float back; arrays are evaluated elementwise.
    """
    FRange(q, s).require_functional()
    x = _check_x(x)
    out = f_raw(x, q, s)
    return float(out) if out.ndim == 0 else out


def calE(x):
    """``H((1 - sqrt(1 - x^2)) / 2)`` with the natural-log binary entropy."""
    x = _check_x(x)
    _, xi = _theta_xi(x)
    out = _binary_entropy(xi / 2.0)
    return float(out) if out.ndim == 0 else out


def ue_2q_analytic(rho: DensityMatrix, q: float, s: float) -> float:
    """Unified-(q, s) entanglement of a two-qubit state via ``f_qs(C)``."""
    FRange(q, s).require_functional()
    return f_qs(concurrence_wootters(rho), q, s)


def ueoa_lower_bound(rho: DensityMatrix, q: float, s: float) -> float:
    """Analytic lower bound ``f_qs(CoA)`` on the unified entanglement of assistance."""
    FRange(q, s).require_functional()
    return f_qs(coa_analytic(rho), q, s)


def e21_pure(psi: PureState, cut: Bipartition | None = None) -> float:
    """Tsallis-2 entropy of the marginal, ``1 - tr rho_A^2``.

    For Schmidt-rank-two states this is ``C^2 / 2`` (not ``C^2``).
    """
    side_a = {0} if cut is None else cut.side_a
    return unified_entropy(partial_trace(psi, side_a), QSParams(2.0, 1.0))
