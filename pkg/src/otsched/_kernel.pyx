# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simplex iteration kernel; same contract as ``_kernel_py.iterate``."""

from libc.math cimport fabs, INFINITY

cimport numpy as cnp

cnp.import_array()

cdef enum:
    _AT_BASIC = 0
    _AT_LOWER = 1
    _AT_UPPER = 2

AT_BASIC = _AT_BASIC
AT_LOWER = _AT_LOWER
AT_UPPER = _AT_UPPER
OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2


def iterate(double[:, ::1] T, double[::1] d, double[::1] xB, cnp.int64_t[::1] basis,
            signed char[::1] status, double[::1] ub, double obj, Py_ssize_t max_iter,
            Py_ssize_t degen_switch, bint bland, double cost_tol, double pivot_tol,
            trace=None):
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1]
    cdef Py_ssize_t i, j, r, q, r_best, best_var, leaving
    cdef Py_ssize_t it = 0, degenerate = 0
    cdef double best, score, sigma, t, t_best, u, delta, piv, f, start, dq
    cdef bint leave_upper

    while True:
        q = -1
        best = -1.0
        for j in range(n):
            if ub[j] <= pivot_tol:
                continue
            if status[j] == _AT_LOWER and d[j] < -cost_tol:
                score = -d[j]
            elif status[j] == _AT_UPPER and d[j] > cost_tol:
                score = d[j]
            else:
                continue
            if bland:
                q = j
                break
            if score > best:
                best = score
                q = j
        if q < 0:
            return OPTIMAL, it, obj, bland
        if it >= max_iter:
            return ITERATION_LIMIT, it, obj, bland

        sigma = 1.0 if status[q] == _AT_LOWER else -1.0
        t_best = ub[q]
        r_best = -1
        leave_upper = False
        best_var = n
        # decreasing basics first, then increasing, to match the reference order
        for r in range(m):
            delta = sigma * T[r, q]
            if delta > pivot_tol:
                t = xB[r] / delta
                if t < 0.0:
                    t = 0.0
                if t < t_best or (t == t_best and r_best >= 0 and basis[r] < best_var):
                    t_best = t
                    r_best = r
                    leave_upper = False
                    best_var = basis[r]
        for r in range(m):
            delta = sigma * T[r, q]
            if delta < -pivot_tol:
                u = ub[basis[r]]
                if u == INFINITY:
                    continue
                t = (u - xB[r]) / -delta
                if t < 0.0:
                    t = 0.0
                if t < t_best or (t == t_best and r_best >= 0 and basis[r] < best_var):
                    t_best = t
                    r_best = r
                    leave_upper = True
                    best_var = basis[r]

        if t_best == INFINITY:
            return UNBOUNDED, it, obj, bland

        it += 1
        obj += d[q] * sigma * t_best
        if t_best > 0.0:
            f = sigma * t_best
            for r in range(m):
                xB[r] -= f * T[r, q]

        if r_best < 0:
            status[q] = _AT_UPPER if sigma > 0 else _AT_LOWER
            leaving = -1
        else:
            leaving = basis[r_best]
            status[leaving] = _AT_UPPER if leave_upper else _AT_LOWER
            start = 0.0 if sigma > 0 else ub[q]
            piv = T[r_best, q]
            for j in range(n):
                T[r_best, j] /= piv
            for i in range(m):
                if i == r_best:
                    continue
                f = T[i, q]
                if f != 0.0:
                    for j in range(n):
                        T[i, j] -= f * T[r_best, j]
                    T[i, q] = 0.0
            dq = d[q]
            if dq != 0.0:
                for j in range(n):
                    d[j] -= dq * T[r_best, j]
            d[q] = 0.0
            xB[r_best] = start + sigma * t_best
            basis[r_best] = q
            status[q] = _AT_BASIC

        if t_best <= pivot_tol:
            degenerate += 1
            if not bland and degenerate >= degen_switch:
                bland = True
        else:
            degenerate = 0
        if trace is not None:
            trace(it, q, leaving, t_best, obj, bland)
