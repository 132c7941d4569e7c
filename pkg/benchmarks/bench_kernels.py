"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--states 5] [--grid 200]

Each case runs the same inputs through both backends and reports the median
wall time and the largest disagreement in the returned values.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from polylab import _core
from polylab.qstate import make_rng, random_mixed
from polylab.roof import random_mixer


def _rows(rank: int, k: int, seed: int) -> np.ndarray:
    rng = make_rng(seed)
    rho = random_mixed(2, rank, rng)
    w, v = rho.eigh
    keep = w > 1e-13
    base = (v[:, keep] * np.sqrt(w[keep])).T
    return np.ascontiguousarray(random_mixer(k, base.shape[0], rng) @ base)


def _time(fn, repeats: int):
    times, out = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def bench_sweep(kern, rank, k, kind, sign, states, q=1.5, s=0.8):
    values, total = [], 0.0
    for seed in range(states):
        V = _rows(rank, k, seed)
        t, (val, _, _) = _time(lambda: kern.sweep_marginal(V.copy(), kind, q, s, sign, 0.3, 1e-8, 1e-10, 2000), 1)
        values.append(val)
        total += t
    return total / states, np.array(values)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--states", type=int, default=5)
    parser.add_argument("--grid", type=int, default=200)
    args = parser.parse_args(argv)

    if _core.native is None:
        print("compiled kernels unavailable; nothing to compare")
        return 1
    py, cy = _core.fallback, _core.native
    cases = [
        ("concurrence min, r=4 k=4", 4, 4, _core.KIND_CONCURRENCE, -1.0),
        ("concurrence max, r=4 k=4", 4, 4, _core.KIND_CONCURRENCE, 1.0),
        ("unified max, r=3 k=9", 3, 9, _core.KIND_UNIFIED, 1.0),
        ("von Neumann min, r=2 k=4", 2, 4, _core.KIND_VON_NEUMANN, -1.0),
    ]
    print(f"{'case':34s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, rank, k, kind, sign in cases:
        tp, vp = bench_sweep(py, rank, k, kind, sign, args.states)
        tc, vc = bench_sweep(cy, rank, k, kind, sign, args.states)
        print(f"{name:34s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f} {np.abs(vp - vc).max():11.2e}")

    tp, hp = _time(lambda: py.h_grid_max(1.5, 0.9, args.grid), 3)
    tc, hc = _time(lambda: cy.h_grid_max(1.5, 0.9, args.grid), 3)
    name = f"h grid max, {args.grid}^2 points"
    print(f"{name:34s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f} {abs(hp[0] - hc[0]):11.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
