# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_fallback.py`` for the reference algorithm."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, log1p, expm1, pow, fabs, cos, sin, INFINITY

cnp.import_array()

cdef int KIND_CONCURRENCE = 0
cdef int KIND_VON_NEUMANN = 1
cdef int KIND_RENYI = 2
cdef int KIND_UNIFIED = 3
cdef int KIND_TSALLIS = 4

cdef double TINY_WEIGHT = 1e-300
cdef double VERTEX_CLAMP = 4.0
cdef double SHRINK = 0.25
cdef double EPS_LIMIT = 1e-7


cdef inline double _abs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef double _marginal_entropy(double det, int kind, double q, double s) nogil:
    cdef double small, value, tr
    if det < 0.0:
        det = 0.0
    elif det > 0.25:
        det = 0.25
    if kind == KIND_CONCURRENCE:
        return 2.0 * sqrt(det)
    small = 2.0 * det / (1.0 + sqrt(1.0 - 4.0 * det))
    if kind == KIND_VON_NEUMANN:
        if small <= 0.0:
            return 0.0
        value = -small * log(small) - (1.0 - small) * log1p(-small)
    else:
        tr = pow(1.0 - small, q)
        if small > 0.0:
            tr += pow(small, q)
        if kind == KIND_RENYI:
            value = log(tr) / (1.0 - q)
        elif kind == KIND_TSALLIS:
            value = (tr - 1.0) / (1.0 - q)
        else:
            value = expm1(s * log(tr)) / ((1.0 - q) * s)
    return value if value > 0.0 else 0.0


def marginal_entropy(double det, int kind, double q, double s):
    return _marginal_entropy(det, kind, q, s)


cdef inline double _weighted(double p, double qq, double r2, int kind, double q, double s) nogil:
    cdef double w = p + qq
    if w <= TINY_WEIGHT:
        return 0.0
    return w * _marginal_entropy((p * qq - r2) / (w * w), kind, q, s)


cdef struct Pair:
    double na0, na1, nb0, nb1
    double complex g00, g11, ga, gb, x01, x10


cdef inline double complex _vdot(const double complex* a, const double complex* b,
                                 Py_ssize_t m) nogil:
    cdef double complex acc = 0.0
    cdef Py_ssize_t t
    for t in range(m):
        acc = acc + a[t].conjugate() * b[t]
    return acc


cdef bint _prepare(const double complex* a, const double complex* b, Py_ssize_t m,
                   Pair* pr) nogil:
    # a, b: rows i and j; halves at offsets 0 and m
    pr.na0 = _vdot(a, a, m).real
    pr.na1 = _vdot(a + m, a + m, m).real
    pr.nb0 = _vdot(b, b, m).real
    pr.nb1 = _vdot(b + m, b + m, m).real
    if pr.na0 + pr.na1 <= TINY_WEIGHT and pr.nb0 + pr.nb1 <= TINY_WEIGHT:
        return False
    pr.g00 = _vdot(a, b, m)
    pr.g11 = _vdot(a + m, b + m, m)
    pr.ga = _vdot(a, a + m, m)
    pr.gb = _vdot(b, b + m, m)
    pr.x01 = _vdot(a, b + m, m)
    pr.x10 = _vdot(b, a + m, m)
    return True


cdef inline double _row(Pair* pr, double complex al, double complex be,
                        int kind, double q, double s) nogil:
    cdef double aa = _abs2(al)
    cdef double bb = _abs2(be)
    cdef double complex cross = al.conjugate() * be
    cdef double p = aa * pr.na0 + bb * pr.nb0 + 2.0 * (cross * pr.g00).real
    cdef double qq = aa * pr.na1 + bb * pr.nb1 + 2.0 * (cross * pr.g11).real
    cdef double complex r = aa * pr.ga + bb * pr.gb + cross * pr.x01 + be.conjugate() * al * pr.x10
    return _weighted(p, qq, _abs2(r), kind, q, s)


cdef inline void _coeffs(int gen, double t, double complex* c4) nogil:
    cdef double c = cos(t)
    cdef double sn = sin(t)
    if gen == 0:
        c4[0] = c
        c4[1] = sn
        c4[2] = -sn
        c4[3] = c
    else:
        c4[0] = c
        c4[1] = 1j * sn
        c4[2] = 1j * sn
        c4[3] = c


cdef double _row_value(const double complex* a, Py_ssize_t m,
                       int kind, double q, double s) nogil:
    cdef double p = _vdot(a, a, m).real
    cdef double qq = _vdot(a + m, a + m, m).real
    cdef double complex r = _vdot(a, a + m, m)
    return _weighted(p, qq, _abs2(r), kind, q, s)


def marginal_row_values(double complex[:, ::1] V, int kind, double q, double s):
    cdef Py_ssize_t k = V.shape[0]
    cdef Py_ssize_t m = V.shape[1] // 2
    out = np.empty(k)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(k):
        o[i] = _row_value(&V[i, 0], m, kind, q, s)
    return out


def sweep_marginal(cnp.ndarray V_arr, int kind, double q, double s, double sign,
                   double step0, double step_tol, double value_tol, int max_iters):
    """Compiled twin of ``_fallback.sweep_marginal`` (in place on ``V_arr``)."""
    cdef double complex[:, ::1] V = V_arr
    cdef Py_ssize_t k = V.shape[0]
    cdef Py_ssize_t d = V.shape[1]
    cdef double complex* base = &V[0, 0]
    cdef double complex* ri
    cdef double complex* rj
    cdef Py_ssize_t m = d // 2
    cdef double[::1] vals = np.empty(k)
    cdef Py_ssize_t i, j, t_
    cdef int gen, sweeps = 0
    cdef bint converged = False
    cdef double h = step0, total = 0.0, before, max_move, gain
    cdef double f0, best, best_t, best_i, best_j, fpi, fpj, fmi, fmj, fp, fm, curv, t, lim, fti, ftj
    cdef double complex c4[4]
    cdef double complex vi_t
    cdef Pair pr

    with nogil:
        for i in range(k):
            vals[i] = _row_value(base + i * d, m, kind, q, s)
            total += vals[i]
        while sweeps < max_iters:
            sweeps += 1
            before = total
            max_move = 0.0
            for i in range(k - 1):
                for j in range(i + 1, k):
                    ri = base + i * d
                    rj = base + j * d
                    for gen in range(2):
                        if not _prepare(ri, rj, m, &pr):
                            break
                        f0 = vals[i] + vals[j]
                        best = sign * f0
                        best_t = 0.0
                        best_i = vals[i]
                        best_j = vals[j]
                        _coeffs(gen, h, c4)
                        fpi = _row(&pr, c4[0], c4[1], kind, q, s)
                        fpj = _row(&pr, c4[2], c4[3], kind, q, s)
                        _coeffs(gen, -h, c4)
                        fmi = _row(&pr, c4[0], c4[1], kind, q, s)
                        fmj = _row(&pr, c4[2], c4[3], kind, q, s)
                        fp = fpi + fpj
                        fm = fmi + fmj
                        if sign * fp > best:
                            best = sign * fp
                            best_t = h
                            best_i = fpi
                            best_j = fpj
                        if sign * fm > best:
                            best = sign * fm
                            best_t = -h
                            best_i = fmi
                            best_j = fmj
                        curv = sign * (fp - 2.0 * f0 + fm)
                        if curv < 0.0:
                            t = h * (fm - fp) / (2.0 * (fp - 2.0 * f0 + fm))
                            lim = VERTEX_CLAMP * h
                            if t < -lim:
                                t = -lim
                            elif t > lim:
                                t = lim
                            if t != 0.0 and t != h and t != -h:
                                _coeffs(gen, t, c4)
                                fti = _row(&pr, c4[0], c4[1], kind, q, s)
                                ftj = _row(&pr, c4[2], c4[3], kind, q, s)
                                if sign * (fti + ftj) > best:
                                    best = sign * (fti + ftj)
                                    best_t = t
                                    best_i = fti
                                    best_j = ftj
                        if best_t != 0.0:
                            _coeffs(gen, best_t, c4)
                            for t_ in range(d):
                                vi_t = ri[t_]
                                ri[t_] = c4[0] * vi_t + c4[1] * rj[t_]
                                rj[t_] = c4[2] * vi_t + c4[3] * rj[t_]
                            vals[i] = best_i
                            vals[j] = best_j
                            if fabs(best_t) > max_move:
                                max_move = fabs(best_t)
            total = 0.0
            for i in range(k):
                total += vals[i]
            gain = sign * (total - before)
            if gain <= value_tol:
                h *= SHRINK
                if h < step_tol:
                    converged = True
                    break
            else:
                h = min(step0, max(SHRINK * h, 2.0 * max_move))
        total = 0.0
        for i in range(k):
            total += _row_value(base + i * d, m, kind, q, s)
    return total, sweeps, bool(converged)


# -- h grids ----------------------------------------------------------------


cdef double _binary_entropy(double p) nogil:
    cdef double out = 0.0
    if p > 0.0:
        out -= p * log(p)
    if p < 1.0:
        out -= (1.0 - p) * log1p(-p)
    return out


cdef double _f(double x, double q, double s) nogil:
    cdef double root, theta, xi, inner
    root = 1.0 - x * x
    root = sqrt(root) if root > 0.0 else 0.0
    theta = 1.0 + root
    xi = x * x / theta
    if fabs(q - 1.0) < EPS_LIMIT:
        return _binary_entropy(xi / 2.0)
    inner = pow(theta / 2.0, q)
    if xi > 0.0:
        inner += pow(xi / 2.0, q)
    if fabs(s) < EPS_LIMIT:
        return log(inner) / (1.0 - q)
    return expm1(s * log(inner)) / ((1.0 - q) * s)


def f_values(double[::1] xs, double q, double s):
    out = np.empty(xs.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(xs.shape[0]):
        o[i] = _f(xs[i], q, s)
    return out


def h_grid_max(double q, double s, int n):
    """Compiled twin of ``_fallback.h_grid_max``."""
    cdef double[::1] fx = np.empty(n)
    cdef double[::1] xs = np.linspace(0.0, 1.0, n)
    cdef Py_ssize_t i, j, bi = 0, bj = 0
    cdef double best = -INFINITY, r2, h
    with nogil:
        for i in range(n):
            fx[i] = _f(xs[i], q, s)
        for i in range(n):
            for j in range(n):
                r2 = xs[i] * xs[i] + xs[j] * xs[j]
                if r2 > 1.0:
                    continue
                h = _f(sqrt(r2), q, s) - (fx[i] + fx[j])
                if h > best:
                    best = h
                    bi = i
                    bj = j
    return best, int(bi), int(bj)
