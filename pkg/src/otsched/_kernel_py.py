"""Pure-Python/numpy simplex iteration kernel.

Reference twin of ``_kernel.pyx``; both expose :func:`iterate` with the same
contract and pivot sequence.
"""

import numpy as np

AT_BASIC = 0
AT_LOWER = 1
AT_UPPER = 2

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2


def iterate(T, d, xB, basis, status, ub, obj, max_iter, degen_switch, bland,
            cost_tol, pivot_tol, trace=None):
    """Run bounded-variable primal simplex pivots in place.

    ``T`` is the m-by-N tableau B^-1 A, ``d`` the reduced-cost row, ``xB`` the
    basic values, ``status`` the per-column bound status and ``ub`` the upper
    bounds of the shifted (lower bound zero) columns.

    Returns ``(code, iterations, obj, bland)``.
    """
    m, n = T.shape
    fixed = ub <= pivot_tol
    cols = np.arange(n)
    degenerate = 0
    it = 0
    while True:
        at_lower = (status == AT_LOWER) & ~fixed & (d < -cost_tol)
        at_upper = (status == AT_UPPER) & ~fixed & (d > cost_tol)
        eligible = at_lower | at_upper
        if not eligible.any():
            return OPTIMAL, it, obj, bland
        if it >= max_iter:
            return ITERATION_LIMIT, it, obj, bland

        if bland:
            q = int(cols[eligible][0])
        else:
            score = np.where(eligible, np.abs(d), -1.0)
            q = int(np.argmax(score))
        sigma = 1.0 if status[q] == AT_LOWER else -1.0

        alpha = T[:, q]
        delta = sigma * alpha
        t_best = ub[q]
        r_best = -1
        leave_upper = False
        best_var = n
        # Ratio test; ties go to the lowest basic column index.
        dec = np.flatnonzero(delta > pivot_tol)
        inc = np.flatnonzero(delta < -pivot_tol)
        for r in dec:
            t = xB[r] / delta[r]
            if t < 0.0:
                t = 0.0
            if t < t_best or (t == t_best and r_best >= 0 and basis[r] < best_var):
                t_best, r_best, leave_upper, best_var = t, r, False, basis[r]
        for r in inc:
            u = ub[basis[r]]
            if u == np.inf:
                continue
            t = (u - xB[r]) / -delta[r]
            if t < 0.0:
                t = 0.0
            if t < t_best or (t == t_best and r_best >= 0 and basis[r] < best_var):
                t_best, r_best, leave_upper, best_var = t, r, True, basis[r]

        if t_best == np.inf:
            return UNBOUNDED, it, obj, bland

        it += 1
        obj += d[q] * sigma * t_best
        if t_best > 0.0:
            xB -= (sigma * t_best) * alpha

        if r_best < 0:
            # entering column reaches its own opposite bound: no basis change
            status[q] = AT_UPPER if sigma > 0 else AT_LOWER
            leaving = -1
        else:
            leaving = int(basis[r_best])
            status[leaving] = AT_UPPER if leave_upper else AT_LOWER
            start = 0.0 if sigma > 0 else ub[q]
            piv = T[r_best, q]
            T[r_best] /= piv
            col = T[:, q].copy()
            col[r_best] = 0.0
            T -= np.outer(col, T[r_best])
            d -= d[q] * T[r_best]
            d[q] = 0.0
            xB[r_best] = start + sigma * t_best
            basis[r_best] = q
            status[q] = AT_BASIC

        if t_best <= pivot_tol:
            degenerate += 1
            if not bland and degenerate >= degen_switch:
                bland = True
        else:
            degenerate = 0
        if trace is not None:
            trace(it, q, leaving, t_best, obj, bland)
