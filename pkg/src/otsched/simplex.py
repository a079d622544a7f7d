"""Two-phase bounded-variable primal simplex on a dense tableau.

The pivot loop lives in a kernel: the compiled ``_kernel`` extension when it
is importable, otherwise ``_kernel_py``.  Set ``OTSCHED_KERNEL=python`` to
force the fallback.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernel_py
from .formulation import DenseLp, LpProblem

try:
    from . import _kernel as _kernel_ext
except ImportError:  # extension not built
    _kernel_ext = None

log = logging.getLogger(__name__)

COST_TOL = 1e-9
PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
PHASE1_TOL = 1e-7
DEGENERATE_SWITCH = 50

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_KERNELS = {"python": _kernel_py}
if _kernel_ext is not None:
    _KERNELS["compiled"] = _kernel_ext


def _default_backend() -> str:
    forced = os.environ.get("OTSCHED_KERNEL", "").strip().lower()
    if forced:
        if forced not in ("python", "compiled"):
            raise ValueError(f"OTSCHED_KERNEL must be 'python' or 'compiled', got {forced!r}")
        if forced not in _KERNELS:
            raise ImportError("OTSCHED_KERNEL=compiled but the extension is not built")
        return forced
    return "compiled" if "compiled" in _KERNELS else "python"


BACKEND = _default_backend()


def available_backends() -> list[str]:
    return sorted(_KERNELS)


class IterationLimitError(RuntimeError):
    def __init__(self, iterations: int, limit: int):
        self.iterations = iterations
        self.limit = limit
        super().__init__(f"simplex stopped after {iterations} iterations (limit {limit})")


@dataclass
class LpSolution:
    status: str
    objective: float
    values: np.ndarray
    iterations: int
    names: tuple = field(default=(), repr=False)
    bland: bool = False

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def solve_lp(problem: LpProblem, *, verbose: bool = False, backend: str | None = None,
             max_iter: int | None = None, degenerate_switch: int = DEGENERATE_SWITCH) -> LpSolution:
    """Minimize ``problem``'s objective; integrality flags are ignored."""
    sol = solve_dense(
        problem.dense,
        verbose=verbose,
        backend=backend,
        max_iter=max_iter,
        degenerate_switch=degenerate_switch,
    )
    sol.names = problem.names
    if sol.status == OPTIMAL:
        sol.objective += problem.objective_offset
    return sol


def solve_dense(lp: DenseLp, lower=None, upper=None, *, verbose=False, backend=None,
                max_iter=None, degenerate_switch=DEGENERATE_SWITCH) -> LpSolution:
    """Solve the matrix form, optionally overriding variable bounds."""
    kernel = _KERNELS[backend or BACKEND]
    c, A, b, senses = lp.c, lp.A, lp.b, lp.senses
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,) or senses.shape != (m,):
        raise ValueError("inconsistent problem dimensions")
    lo = lp.lower if lower is None else np.asarray(lower, dtype=float)
    hi = lp.upper if upper is None else np.asarray(upper, dtype=float)
    if lo.shape != (n,) or hi.shape != (n,):
        raise ValueError("bound vectors do not match the variable count")
    if not np.all(np.isfinite(lo)):
        raise ValueError("lower bounds must be finite")

    if np.any(hi < lo - FEAS_TOL):
        return LpSolution(INFEASIBLE, float("nan"), np.full(n, np.nan), 0)
    span = np.maximum(hi - lo, 0.0)
    rhs = b - A @ lo

    n_ineq = int(np.count_nonzero(senses))
    sign = np.ones(m)
    basic_col = np.empty(m, dtype=np.int64)
    slack_of = {}
    col = n
    for r in range(m):
        if senses[r] != 0:
            slack_of[r] = col
            col += 1
    art_rows = []
    for r in range(m):
        if senses[r] < 0 and rhs[r] >= 0:
            basic_col[r] = slack_of[r]
        elif senses[r] > 0 and rhs[r] <= 0:
            sign[r] = -1.0
            basic_col[r] = slack_of[r]
        else:
            if rhs[r] < 0:
                sign[r] = -1.0
            art_rows.append(r)
    n_art = len(art_rows)
    N = n + n_ineq + n_art

    T = np.zeros((m, N))
    T[:, :n] = A
    for r, j in slack_of.items():
        T[r, j] = -1.0 if senses[r] > 0 else 1.0
    for a, r in enumerate(art_rows):
        T[r, n + n_ineq + a] = 1.0
        basic_col[r] = n + n_ineq + a
    T *= sign[:, None]
    T = np.ascontiguousarray(T)
    xB = sign * rhs
    ub = np.concatenate([span, np.full(n_ineq + n_art, np.inf)])
    status = np.full(N, _kernel_py.AT_LOWER, dtype=np.int8)
    status[basic_col] = _kernel_py.AT_BASIC

    limit = max_iter if max_iter is not None else 100 * (m + N)
    trace = _make_trace() if verbose else None
    used = 0
    bland = False

    if n_art:
        cost = np.zeros(N)
        cost[n + n_ineq:] = 1.0
        d = cost - cost[basic_col] @ T
        obj = float(cost[basic_col] @ xB)
        code, it, obj, bland = kernel.iterate(
            T, d, xB, basic_col, status, ub, obj, limit, degenerate_switch, bland,
            COST_TOL, PIVOT_TOL, trace,
        )
        used += it
        if code == _kernel_py.ITERATION_LIMIT:
            raise IterationLimitError(used, limit)
        art = basic_col >= n + n_ineq
        infeas = float(xB[art].sum())
        if verbose:
            log.debug("phase 1 done: %d iterations, infeasibility %.3g", it, infeas)
        if infeas > PHASE1_TOL:
            return LpSolution(INFEASIBLE, float("nan"), np.full(n, np.nan), used, bland=bland)
        xB[art] = 0.0
        ub[n + n_ineq:] = 0.0

    cost = np.zeros(N)
    cost[:n] = c
    d = cost - cost[basic_col] @ T
    at_upper = status == _kernel_py.AT_UPPER
    obj = float(cost[basic_col] @ xB + cost[at_upper] @ ub[at_upper])
    code, it, obj, bland = kernel.iterate(
        T, d, xB, basic_col, status, ub, obj, limit - used, degenerate_switch, bland,
        COST_TOL, PIVOT_TOL, trace,
    )
    used += it
    if code == _kernel_py.ITERATION_LIMIT:
        raise IterationLimitError(used, limit)
    if code == _kernel_py.UNBOUNDED:
        return LpSolution(UNBOUNDED, float("-inf"), np.full(n, np.nan), used, bland=bland)

    full = np.where(status == _kernel_py.AT_UPPER, ub, 0.0)
    full[basic_col] = xB
    x = np.clip(lo + full[:n], lo, hi)
    return LpSolution(OPTIMAL, float(c @ x), x, used, bland=bland)


def _make_trace():
    def trace(it, entering, leaving, step, obj, bland):
        log.debug(
            "iter %d enter %d leave %s step %.6g obj %.9g%s",
            it, entering, leaving if leaving >= 0 else "-", step, obj, " [bland]" if bland else "",
        )

    return trace


def max_violation(lp: DenseLp, x) -> float:
    """Largest row or bound violation of ``x``."""
    x = np.asarray(x, dtype=float)
    act = lp.A @ x
    viol = np.where(lp.senses < 0, act - lp.b, np.where(lp.senses > 0, lp.b - act, np.abs(act - lp.b)))
    worst = float(np.max(viol, initial=0.0))
    worst = max(worst, float(np.max(lp.lower - x, initial=0.0)), float(np.max(x - lp.upper, initial=0.0)))
    return max(worst, 0.0)
