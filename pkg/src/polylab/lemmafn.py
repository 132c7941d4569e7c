"""Auxiliary functions behind the subadditivity of ``f_{q,s}`` and their grid scans.

With ``f = f_{q,s}`` and ``D = {x, y >= 0, x^2 + y^2 <= 1}``::

    h(x, y) = f(sqrt(x^2 + y^2)) - f(x) - f(y)
    n(t)    = q s (Theta^q + Xi^q)^(s-1) (Theta^(q-1) - Xi^(q-1)) / sqrt(1 - t^2)
    m(x)    = (Theta(x)^q + Xi(x)^q)^s + ((1+x)^q + (1-x)^q)^s - 2^s - 2^(q s)
    l(x)    = m(x) / ((q - 1) s 2^(q s))          (h on the unit circle)

where ``Theta(t) = 1 + sqrt(1 - t^2)`` and ``Xi(t) = 1 - sqrt(1 - t^2)``.
On ``1 <= q <= 2``, ``-q^2 + 4q - 3 <= s <= 1`` the claim is ``h <= 0``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import _core
from .entropy import EPS_LIMIT
from .exceptions import DomainError
from .twoqubit import FRange, _theta_xi, f_raw

FULL_BOX = "full_box"
LEMMA2_REGION = "lemma2_region"
INV_SQRT2 = 1.0 / math.sqrt(2.0)

_D_SLACK = 1e-12


# -- grids ------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Uniform ``(q, s)`` parameter grid.

    ``q_range`` and ``s_range`` are ``(lo, hi, steps)``; ``(v, v, 1)`` is a
    single node.  ``domain_mode``
    ``"full_box"`` keeps every node; ``"lemma2_region"`` keeps only nodes
    inside the region where ``h <= 0`` is claimed
    (``FRange.valid_lemma2``).  ``x_steps`` is the per-axis resolution of
    the point grid on ``D`` used by scans that need one.
    """

    q_range: tuple = (1.0, 2.0, 50)
    s_range: tuple = (0.0, 1.0, 50)
    x_steps: int = 200
    domain_mode: str = FULL_BOX

    def __post_init__(self):
        for name in ("q_range", "s_range"):
            lo, hi, steps = getattr(self, name)
            if int(steps) != steps or steps < 1:
                raise ValueError(f"{name}: steps must be a positive integer")
            # a single-node axis (lo == hi, steps == 1) probes one cell
            if not (lo < hi and steps >= 2) and not (lo == hi and steps == 1):
                raise ValueError(f"{name}: need lo < hi with steps >= 2, or lo == hi with steps == 1")
            object.__setattr__(self, name, (float(lo), float(hi), int(steps)))
        if self.x_steps < 2:
            raise ValueError("x_steps must be >= 2")
        if self.domain_mode not in (FULL_BOX, LEMMA2_REGION):
            raise ValueError(f"unknown domain_mode {self.domain_mode!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        known = {"q_range", "s_range", "x_steps", "domain_mode"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown grid keys: {sorted(unknown)}")
        kw = dict(d)
        for key in ("q_range", "s_range"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)

    def to_dict(self) -> dict:
        return {"q_range": list(self.q_range), "s_range": list(self.s_range),
                "x_steps": self.x_steps, "domain_mode": self.domain_mode}

    def nodes(self) -> list[tuple[float, float]]:
        """Grid nodes in q-major order, filtered by ``domain_mode``."""
        qs = np.linspace(*self.q_range)
        ss = np.linspace(*self.s_range)
        out = [(float(q), float(s)) for q in qs for s in ss]
        if self.domain_mode == LEMMA2_REGION:
            out = [(q, s) for q, s in out if FRange(q, s).valid_lemma2]
        return out


# the [1,2] x [0,1] box and a wider one for in/out contrast
FIGURE1_GRID = GridSpec((1.0, 2.0, 50), (0.0, 1.0, 50))
EXTENDED_GRID = GridSpec((0.5, 2.5, 50), (0.0, 1.5, 50))


def lemma2_grid(steps: int = 50) -> list[tuple[float, float]]:
    """``steps x steps`` nodes covering the ``valid_lemma2`` domain.

    ``q`` runs over ``[1, 2]``; for each ``q``, ``s`` runs from
    ``max(0, -q^2 + 4q - 3)`` to 1.  Every node is in the domain.
    """
    out = []
    for q in np.linspace(1.0, 2.0, steps):
        lo = max(0.0, -q * q + 4.0 * q - 3.0)
        for s in np.linspace(lo, 1.0, steps):
            q_, s_ = float(q), float(s)
            # roundoff can put the lower edge a few ulps below the exact boundary
            while not FRange(q_, s_).valid_lemma2:
                s_ = math.nextafter(s_, 2.0)
            out.append((q_, s_))
    return out


@dataclass(frozen=True)
class ScanCell:
    q: float
    s: float
    x: float
    y: float
    value: float
    in_domain: bool


SCAN_HEADER = ("q", "s", "x", "y", "value", "in_domain")


def _g(v: float) -> str:
    return "%.17g" % v


def scan_rows(cells: Iterable[ScanCell]) -> list[list[str]]:
    return [[_g(c.q), _g(c.s), _g(c.x), _g(c.y), _g(c.value), "1" if c.in_domain else "0"]
            for c in cells]


def write_scan_csv(cells: Sequence[ScanCell], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCAN_HEADER)
        w.writerows(scan_rows(cells))


# -- pointwise functions ----------------------------------------------------------


def _check_point(x: float, y: float) -> tuple[float, float]:
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DomainError("point must be finite", "(x, y) in D")
    if x < -_D_SLACK or y < -_D_SLACK or x * x + y * y > 1.0 + _D_SLACK:
        raise DomainError(f"({x}, {y}) is outside D", "x, y >= 0, x^2 + y^2 <= 1")
    return max(x, 0.0), max(y, 0.0)


def h_qs(x: float, y: float, q: float, s: float) -> float:
    """``f(sqrt(x^2 + y^2)) - f(x) - f(y)`` on ``D``, for ``(q, s)`` where ``f`` is defined."""
    FRange(q, s).require_functional()
    x, y = _check_point(x, y)
    r = min(1.0, math.hypot(x, y))
    # grouping f(x) + f(y) first keeps h(x, y) == h(y, x) bit for bit
    return float(f_raw(r, q, s) - (f_raw(x, q, s) + f_raw(y, q, s)))


def gamma_qs(q: float, s: float) -> float:
    """``1 / ((1 - q) s 2^(s q))``; singular at ``q = 1`` and ``s = 0``."""
    den = (1.0 - q) * s * 2.0 ** (s * q)
    if den == 0.0:
        raise DomainError("Gamma is singular at q = 1 or s = 0", "q != 1, s != 0")
    return 1.0 / den


def n_qs(t, q: float, s: float):
    """The function ``n_{q,s}`` on ``0 < t < 1``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0) or np.any(t >= 1.0):
        raise DomainError("n_qs needs 0 < t < 1", "0 < t < 1")
    theta, xi = _theta_xi(t)
    out = (q * s / np.sqrt(1.0 - t * t)
           * (theta**q + xi**q) ** (s - 1.0)
           * (theta ** (q - 1.0) - xi ** (q - 1.0)))
    return float(out) if out.ndim == 0 else out


def f_prime(t, q: float, s: float):
    """Derivative of ``f_{q,s}`` on ``0 < t < 1`` (all regimes)."""
    t = np.asarray(t, dtype=float)
    theta, xi = _theta_xi(t)
    root = np.sqrt(1.0 - t * t)
    if abs(q - 1.0) < EPS_LIMIT:
        # d/dt H(Xi/2) = ln(Theta / Xi) * t / (2 sqrt(1 - t^2))
        out = np.log(theta / xi) * t / (2.0 * root)
    elif abs(s) < EPS_LIMIT:
        out = q * t * (xi ** (q - 1.0) - theta ** (q - 1.0)) / ((1.0 - q) * root * (theta**q + xi**q))
    else:
        out = -gamma_qs(q, s) * t * n_qs(t, q, s)
    return float(out) if np.ndim(out) == 0 else out


def grad_h(x: float, y: float, q: float, s: float) -> tuple[float, float]:
    """Closed-form gradient of :func:`h_qs` at an interior point of ``D``.

    Off the limit seams this is ``Gamma * (x (n(x) - n(r)), y (n(y) - n(r)))``
    with ``r = sqrt(x^2 + y^2)``.
    """
    FRange(q, s).require_functional()
    x, y = _check_point(x, y)
    r = math.hypot(x, y)
    if x <= 0.0 or y <= 0.0 or r >= 1.0:
        raise DomainError("gradient needs an interior point of D", "x, y > 0, x^2 + y^2 < 1")
    fr = f_prime(r, q, s) / r
    return float(x * fr - f_prime(x, q, s)), float(y * fr - f_prime(y, q, s))


def _pair_sum(a, b, q: float, s: float):
    return (a**q + b**q) ** s


def m_qs(x, q: float, s: float):
    """``m_{q,s}(x)`` on ``0 <= x <= 1``; ``m(0) = m(1) = 0``."""
    x = _check_unit(x)
    theta, xi = _theta_xi(x)
    out = (_pair_sum(theta, xi, q, s) + _pair_sum(1.0 + x, 1.0 - x, q, s)
           - 2.0**s - 2.0 ** (q * s))
    return float(out) if out.ndim == 0 else out


def l_qs(x, q: float, s: float):
    """``h`` restricted to the unit circle: ``m(x) / ((q - 1) s 2^(q s))``."""
    den = (q - 1.0) * s * 2.0 ** (q * s)
    if den == 0.0:
        raise DomainError("l_qs is singular at q = 1 or s = 0", "q != 1, s != 0")
    return m_qs(x, q, s) / den


def dm_dx(x, q: float, s: float):
    """Closed-form derivative of :func:`m_qs` on ``0 < x < 1``."""
    x = np.asarray(x, dtype=float)
    theta, xi = _theta_xi(x)
    a, b = 1.0 + x, 1.0 - x
    out = (s * q * (a**q + b**q) ** (s - 1.0)
           * (a ** (q - 1.0) - b ** (q - 1.0))
           - s * q * x * (theta**q + xi**q) ** (s - 1.0)
           * (theta ** (q - 1.0) - xi ** (q - 1.0)) / np.sqrt(1.0 - x * x))
    return float(out) if out.ndim == 0 else out


def _check_unit(x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < -_D_SLACK) or np.any(x > 1.0 + _D_SLACK):
        raise DomainError("argument must lie in [0, 1]", "0 <= x <= 1")
    return np.clip(x, 0.0, 1.0)


# -- scans ------------------------------------------------------------------------


def _pool_map(fn, items, threads: int):
    items = list(items)
    if threads == 1 or len(items) < 2:
        return [fn(it) for it in items]
    workers = None if threads <= 0 else threads
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def m_critical_surface(grid: GridSpec = FIGURE1_GRID, threads: int = 1) -> list[ScanCell]:
    """``m_{q,s}(1/sqrt 2)`` at every grid node, in grid order."""
    def cell(node):
        q, s = node
        return ScanCell(q, s, INV_SQRT2, INV_SQRT2, m_qs(INV_SQRT2, q, s), FRange(q, s).valid_lemma2)

    return _pool_map(cell, grid.nodes(), threads)


@dataclass(frozen=True)
class HScan:
    max_value: float
    x: float
    y: float


def h_nonpositivity_scan(q: float, s: float, x_steps: int = 400, backend: str | None = None) -> HScan:
    """Maximum of ``h`` over the uniform ``x_steps x x_steps`` grid of ``D`` and its location.

    No domain check is made, so out-of-domain ``(q, s)`` can be mapped too.
    """
    if x_steps < 2:
        raise ValueError("x_steps must be >= 2")
    value, ix, iy = _core.get_kernels(backend).h_grid_max(float(q), float(s), int(x_steps))
    step = 1.0 / (x_steps - 1)
    return HScan(float(value), ix * step, iy * step)


def h_region(grid: GridSpec, threads: int = 1) -> list[ScanCell]:
    """Per-node grid maximum of ``h`` (``grid.x_steps`` points per axis)."""
    def cell(node):
        q, s = node
        res = h_nonpositivity_scan(q, s, grid.x_steps)
        return ScanCell(q, s, res.x, res.y, res.max_value, FRange(q, s).valid_lemma2)

    return _pool_map(cell, grid.nodes(), threads)


@dataclass(frozen=True)
class CriticalCheck:
    unique: bool
    points: tuple


def m_unique_critical_check(q: float, s: float, x_steps: int = 1000) -> CriticalCheck:
    """Sign changes of ``dm/dx`` on ``(0, 1)``, each refined by root bracketing.

    ``unique`` is true iff exactly one critical point is found.
    """
    xs = np.linspace(0.0, 1.0, x_steps + 1)[1:-1]
    d = dm_dx(xs, q, s)
    points = []
    for i in range(len(xs) - 1):
        a, b = d[i], d[i + 1]
        if a == 0.0:
            points.append(float(xs[i]))
        elif a * b < 0.0:
            points.append(float(brentq(dm_dx, xs[i], xs[i + 1], args=(q, s), xtol=1e-15)))
    return CriticalCheck(len(points) == 1, tuple(points))
