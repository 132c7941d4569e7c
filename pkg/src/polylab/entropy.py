"""Unified-(q, s) entropy and its von Neumann, Renyi and Tsallis limits.

All logarithms are natural.  With that choice the q -> 1 limit of the
unified entropy is exactly the von Neumann entropy in nats, so e.g. the
entanglement of formation of a Bell state is ``ln 2``, not 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .qstate import RANK_TOL, DensityMatrix, clip_spectrum

EPS_LIMIT = 1e-7

GENERIC = "generic"
VON_NEUMANN = "von_neumann"
RENYI = "renyi"
TSALLIS = "tsallis"


@dataclass(frozen=True)
class QSParams:
    """A ``(q, s)`` parameter pair and the formula regime it selects.

    ``q`` within ``EPS_LIMIT`` of 1 selects the von Neumann limit (regardless
    of ``s``), ``s`` within ``EPS_LIMIT`` of 0 selects Renyi-q, and ``s``
    within ``EPS_LIMIT`` of 1 uses the Tsallis-q shortcut.
    """

    q: float
    s: float

    def __post_init__(self):
        q, s = float(self.q), float(self.s)
        if not (np.isfinite(q) and np.isfinite(s)):
            raise DomainError(f"non-finite parameters q={q}, s={s}")
        if q < 0:
            raise DomainError(f"q must be >= 0, got {q}", "q >= 0")
        if s < 0:
            raise DomainError(f"s must be >= 0, got {s}", "s >= 0")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "s", s)

    @property
    def regime(self) -> str:
        if abs(self.q - 1.0) < EPS_LIMIT:
            return VON_NEUMANN
        if abs(self.s) < EPS_LIMIT:
            return RENYI
        if abs(self.s - 1.0) < EPS_LIMIT:
            return TSALLIS
        return GENERIC


def _power_trace(eigs: np.ndarray, q: float) -> float:
    # eigenvalues at the roundoff floor count as zero; for q < 1 their
    # powers would otherwise leak sqrt(eps)-sized noise into pure states
    nz = eigs[eigs > RANK_TOL]
    return float(np.sum(nz**q))


def entropy_of_spectrum(eigs, params: QSParams) -> float:
    """Unified-(q, s) entropy of a probability vector (already clipped)."""
    eigs = np.asarray(eigs, dtype=float)
    regime = params.regime
    if regime == VON_NEUMANN:
        nz = eigs[eigs > 0.0]
        value = float(-np.sum(nz * np.log(nz)))
    else:
        q, s = params.q, params.s
        tr = _power_trace(eigs, q)
        if regime == RENYI:
            value = np.log(tr) / (1.0 - q)
        elif regime == TSALLIS:
            value = (tr - 1.0) / (1.0 - q)
        else:
            # expm1(s ln tr) == tr**s - 1 without cancellation near tr == 1
            value = np.expm1(s * np.log(tr)) / ((1.0 - q) * s)
    # the entropy is nonnegative; anything below zero is roundoff on pure spectra
    return max(float(value), 0.0)


def unified_entropy(rho: DensityMatrix, params: QSParams) -> float:
    """``[(tr rho^q)^s - 1] / ((1 - q) s)`` with its limiting forms."""
    return entropy_of_spectrum(rho.spectrum, params)


def von_neumann(rho: DensityMatrix) -> float:
    return unified_entropy(rho, QSParams(1.0, 1.0))


def renyi_q(rho: DensityMatrix, q: float) -> float:
    return unified_entropy(rho, QSParams(q, 0.0))


def tsallis_q(rho: DensityMatrix, q: float) -> float:
    return unified_entropy(rho, QSParams(q, 1.0))


def spectrum_from_values(values) -> np.ndarray:
    """Validate and normalize a raw probability vector."""
    return clip_spectrum(np.asarray(values, dtype=float))
