"""Pure-Python reference implementations of the hot kernels.

The compiled module ``_native`` mirrors these functions operation for
operation.  Keep the two in step: the sweep below defines the algorithm.

Sweep optimizer
---------------
Rows of ``V`` are the unnormalized members ``sqrt(p_i) |psi_i>`` of a
pure-state decomposition.  A coordinate move mixes two rows with the
2x2 unitary ``exp(t A)``; ``A`` is one of the two off-diagonal
skew-Hermitian generators for the pair, so every move stays in the set
of decompositions of the same mixed state.  Along each coordinate the
objective is sampled at ``-h, 0, +h``; a concave parabola through the three
values proposes its vertex (clamped to ``4h``).  The best of the sampled
angles is kept if it strictly improves.  After each full sweep the step
shrinks by 4 when the gain is at most ``value_tol``; otherwise it tracks
twice the largest accepted move.  The run converges once ``h < step_tol``.
"""

from __future__ import annotations

import math

import numpy as np

from ..twoqubit import f_raw

KIND_CONCURRENCE = 0
KIND_VON_NEUMANN = 1
KIND_RENYI = 2
KIND_UNIFIED = 3
KIND_TSALLIS = 4

TINY_WEIGHT = 1e-300
VERTEX_CLAMP = 4.0
SHRINK = 0.25


def marginal_entropy(det: float, kind: int, q: float, s: float) -> float:
    """Payoff of a normalized state whose qubit marginal has determinant ``det``."""
    if det < 0.0:
        det = 0.0
    elif det > 0.25:
        det = 0.25
    if kind == KIND_CONCURRENCE:
        return 2.0 * math.sqrt(det)
    small = 2.0 * det / (1.0 + math.sqrt(1.0 - 4.0 * det))
    if kind == KIND_VON_NEUMANN:
        if small <= 0.0:
            return 0.0
        value = -small * math.log(small) - (1.0 - small) * math.log1p(-small)
    else:
        tr = (1.0 - small) ** q
        if small > 0.0:
            tr += small**q
        if kind == KIND_RENYI:
            value = math.log(tr) / (1.0 - q)
        elif kind == KIND_TSALLIS:
            value = (tr - 1.0) / (1.0 - q)
        else:
            value = math.expm1(s * math.log(tr)) / ((1.0 - q) * s)
    return value if value > 0.0 else 0.0


def _weighted(p: float, qq: float, r2: float, kind: int, q: float, s: float) -> float:
    # p, qq: squared norms of the two halves; r2 = |<u0|u1>|^2
    w = p + qq
    if w <= TINY_WEIGHT:
        return 0.0
    return w * marginal_entropy((p * qq - r2) / (w * w), kind, q, s)


class MarginalPairs:
    """Pair evaluator for payoffs of the leading qubit's marginal.

    Each row is split in halves ``u0 = u[:m]`` and ``u1 = u[m:]``; the
    marginal of the leading qubit is ``[[|u0|^2, <u1|u0>], [<u0|u1>, |u1|^2]]``.
    """

    def __init__(self, kind: int, q: float, s: float):
        self.kind, self.q, self.s = kind, q, s

    def row_values(self, V: np.ndarray) -> np.ndarray:
        m = V.shape[1] // 2
        out = np.empty(V.shape[0])
        for i, row in enumerate(V):
            u0, u1 = row[:m], row[m:]
            p = float(np.vdot(u0, u0).real)
            qq = float(np.vdot(u1, u1).real)
            r = np.vdot(u0, u1)
            out[i] = _weighted(p, qq, abs(r) ** 2, self.kind, self.q, self.s)
        return out

    def prepare(self, V: np.ndarray, i: int, j: int) -> bool:
        m = V.shape[1] // 2
        a0, a1, b0, b1 = V[i, :m], V[i, m:], V[j, :m], V[j, m:]
        self.na0 = float(np.vdot(a0, a0).real)
        self.na1 = float(np.vdot(a1, a1).real)
        self.nb0 = float(np.vdot(b0, b0).real)
        self.nb1 = float(np.vdot(b1, b1).real)
        if self.na0 + self.na1 <= TINY_WEIGHT and self.nb0 + self.nb1 <= TINY_WEIGHT:
            return False
        self.g00 = complex(np.vdot(a0, b0))
        self.g11 = complex(np.vdot(a1, b1))
        self.ga = complex(np.vdot(a0, a1))
        self.gb = complex(np.vdot(b0, b1))
        self.x01 = complex(np.vdot(a0, b1))
        self.x10 = complex(np.vdot(b0, a1))
        return True

    def _row(self, al: complex, be: complex) -> float:
        aa = abs(al) ** 2
        bb = abs(be) ** 2
        cross = al.conjugate() * be
        p = aa * self.na0 + bb * self.nb0 + 2.0 * (cross * self.g00).real
        qq = aa * self.na1 + bb * self.nb1 + 2.0 * (cross * self.g11).real
        r = aa * self.ga + bb * self.gb + cross * self.x01 + be.conjugate() * al * self.x10
        return _weighted(p, qq, r.real * r.real + r.imag * r.imag, self.kind, self.q, self.s)

    def trial(self, ai, bi, aj, bj) -> tuple[float, float]:
        return self._row(ai, bi), self._row(aj, bj)


class CallablePairs:
    """Pair evaluator for an arbitrary payoff of a normalized state vector."""

    def __init__(self, payoff):
        self.payoff = payoff

    def _value(self, u: np.ndarray) -> float:
        w = float(np.vdot(u, u).real)
        if w <= TINY_WEIGHT:
            return 0.0
        return w * float(self.payoff(u / math.sqrt(w)))

    def row_values(self, V: np.ndarray) -> np.ndarray:
        return np.array([self._value(row) for row in V])

    def prepare(self, V, i, j) -> bool:
        self.vi, self.vj = V[i].copy(), V[j].copy()
        return bool(np.any(self.vi) or np.any(self.vj))

    def trial(self, ai, bi, aj, bj) -> tuple[float, float]:
        return self._value(ai * self.vi + bi * self.vj), self._value(aj * self.vi + bj * self.vj)


def _coeffs(gen: int, t: float):
    c, s = math.cos(t), math.sin(t)
    if gen == 0:
        return complex(c), complex(s), complex(-s), complex(c)
    return complex(c), complex(0.0, s), complex(0.0, s), complex(c)


def sweep(V: np.ndarray, evaluator, sign: float, step0: float, step_tol: float,
          value_tol: float, max_iters: int) -> tuple[float, int, bool]:
    """Maximize ``sign * sum(row values)`` over pair rotations of ``V`` (in place).

    Returns ``(value, sweeps, converged)`` where ``value`` is the unsigned
    objective recomputed from the final rows.
    """
    k = V.shape[0]
    vals = evaluator.row_values(V)
    total = float(np.sum(vals))
    h = step0
    sweeps = 0
    converged = False
    while sweeps < max_iters:
        sweeps += 1
        before = total
        max_move = 0.0
        for i in range(k - 1):
            for j in range(i + 1, k):
                for gen in (0, 1):
                    if not evaluator.prepare(V, i, j):
                        break
                    f0 = vals[i] + vals[j]
                    best = sign * f0
                    best_t, best_i, best_j = 0.0, vals[i], vals[j]
                    fpi, fpj = evaluator.trial(*_coeffs(gen, h))
                    fmi, fmj = evaluator.trial(*_coeffs(gen, -h))
                    fp, fm = fpi + fpj, fmi + fmj
                    if sign * fp > best:
                        best, best_t, best_i, best_j = sign * fp, h, fpi, fpj
                    if sign * fm > best:
                        best, best_t, best_i, best_j = sign * fm, -h, fmi, fmj
                    curv = sign * (fp - 2.0 * f0 + fm)
                    if curv < 0.0:
                        t = h * (fm - fp) / (2.0 * (fp - 2.0 * f0 + fm))
                        lim = VERTEX_CLAMP * h
                        t = min(max(t, -lim), lim)
                        if t != 0.0 and t != h and t != -h:
                            fti, ftj = evaluator.trial(*_coeffs(gen, t))
                            if sign * (fti + ftj) > best:
                                best, best_t, best_i, best_j = sign * (fti + ftj), t, fti, ftj
                    if best_t != 0.0:
                        ai, bi, aj, bj = _coeffs(gen, best_t)
                        vi = V[i].copy()
                        V[i] = ai * vi + bi * V[j]
                        V[j] = aj * vi + bj * V[j]
                        vals[i], vals[j] = best_i, best_j
                        if abs(best_t) > max_move:
                            max_move = abs(best_t)
        total = float(np.sum(vals))
        gain = sign * (total - before)
        if gain <= value_tol:
            h *= SHRINK
            if h < step_tol:
                converged = True
                break
        else:
            h = min(step0, max(SHRINK * h, 2.0 * max_move))
    return float(np.sum(evaluator.row_values(V))), sweeps, converged


def sweep_marginal(V: np.ndarray, kind: int, q: float, s: float, sign: float, step0: float,
                   step_tol: float, value_tol: float, max_iters: int) -> tuple[float, int, bool]:
    """:func:`sweep` specialized to payoffs of the leading qubit's marginal."""
    return sweep(V, MarginalPairs(kind, q, s), sign, step0, step_tol, value_tol, max_iters)


def marginal_row_values(V: np.ndarray, kind: int, q: float, s: float) -> np.ndarray:
    return MarginalPairs(kind, q, s).row_values(V)


# -- h grids --------------------------------------------------------------


def h_grid_max(q: float, s: float, n: int) -> tuple[float, int, int]:
    """Max of ``f(sqrt(x^2+y^2)) - f(x) - f(y)`` over the uniform n x n grid on D.

    Returns ``(max, ix, iy)`` with ``x = ix / (n - 1)``, ``y = iy / (n - 1)``.
    """
    xs = np.linspace(0.0, 1.0, n)
    fx = f_raw(xs, q, s)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    r2 = X * X + Y * Y
    inside = r2 <= 1.0
    h = np.full(r2.shape, -np.inf)
    h[inside] = f_raw(np.sqrt(r2[inside]), q, s) - (fx[:, None] + fx[None, :])[inside]
    flat = int(np.argmax(h))
    ix, iy = divmod(flat, n)
    return float(h[ix, iy]), ix, iy
