"""Branch-and-bound over the simplex relaxation, and the two-stage lexicographic solve."""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .formulation import LE, FormulationOptions, LpProblem, Row, build_model, capacity_cells
from .instance import Instance
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_dense

log = logging.getLogger(__name__)

INT_TOL = 1e-6
PRUNE_TOL = 1e-9
PIN_TOL = 1e-9
NODE_LIMIT = 1_000_000


@dataclass
class MilpSolution:
    status: str
    objective: float
    values: np.ndarray
    nodes_explored: int
    stage2_objective: float | None = None
    names: tuple = field(default=(), repr=False)
    lp_iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class NodeLimitError(RuntimeError):
    """The search hit its node cap before proving optimality.

    ``incumbent`` is the best integer solution found (or ``None``), ``bound`` the
    smallest open-node bound and ``gap`` their difference.
    """

    def __init__(self, nodes: int, incumbent: MilpSolution | None, bound: float):
        self.nodes = nodes
        self.incumbent = incumbent
        self.bound = bound
        self.gap = (incumbent.objective - bound) if incumbent is not None else math.inf
        best = f"incumbent {incumbent.objective:.9g}" if incumbent is not None else "no incumbent"
        super().__init__(f"node limit reached after {nodes} nodes ({best}, bound {bound:.9g}, gap {self.gap:.3g})")


@dataclass(frozen=True)
class NodeEvent:
    node: int
    parent: int
    depth: int
    status: str
    objective: float
    branch_var: int | None


BoundHook = Callable[[np.ndarray, np.ndarray], float]


def solve_milp(problem: LpProblem, *, node_limit: int = NODE_LIMIT, verbose: bool = False,
               backend: str | None = None, reduce: bool = True, bound_hook: BoundHook | None = None,
               incumbent=None, on_node: Callable[[NodeEvent], None] | None = None) -> MilpSolution:
    """Minimize ``problem`` with its integrality flags enforced.

    When the problem carries a symmetry reduction (every model from
    :func:`build_model` does) and ``reduce`` is set, the search runs on the
    pooled model and the optimum is expanded back to per-cell room counts.
    ``bound_hook`` and ``incumbent`` always refer to the problem actually
    searched.
    """
    if reduce and problem.reduction is not None:
        red = problem.reduction
        try:
            sol = branch_and_bound(red.problem, node_limit=node_limit, verbose=verbose, backend=backend,
                                   bound_hook=bound_hook, incumbent=incumbent, on_node=on_node)
        except NodeLimitError as exc:
            if exc.incumbent is not None:
                _expand_into(exc.incumbent, problem)
            raise
        return _expand_into(sol, problem)
    return branch_and_bound(problem, node_limit=node_limit, verbose=verbose, backend=backend,
                            bound_hook=bound_hook, incumbent=incumbent, on_node=on_node)


def branch_and_bound(problem: LpProblem, *, node_limit: int = NODE_LIMIT, verbose: bool = False,
                     backend: str | None = None, bound_hook: BoundHook | None = None,
                     incumbent=None, on_node: Callable[[NodeEvent], None] | None = None) -> MilpSolution:
    """Plain LP-based branch-and-bound on ``problem`` as given.

    Depth-first search, lower bound breaking ties among equally deep nodes;
    branches on the most fractional variable (lowest index on ties) and
    explores the ceiling child first.

    ``bound_hook(lower, upper)`` may return a valid lower bound on any integer
    solution within the node's variable bounds (``inf`` when it proves the node
    empty).  ``incumbent`` optionally seeds the search with a feasible value
    vector.
    """
    lp = problem.dense
    ints = np.flatnonzero(lp.integrality)
    offset = problem.objective_offset

    best_x = None
    best_obj = math.inf
    if incumbent is not None:
        best_x = _round_integral(np.asarray(incumbent, dtype=float), ints)
        best_obj = float(lp.c @ best_x)

    heap = [(0, -math.inf, 0, 0, -1, lp.lower.copy(), lp.upper.copy())]
    seq = 1
    nodes = 0
    iterations = 0
    while heap:
        neg_depth, parent_bound, _, node_id, parent, lo, hi = heapq.heappop(heap)
        if parent_bound >= best_obj - PRUNE_TOL:
            continue
        if nodes >= node_limit:
            open_bound = min([parent_bound] + [h[1] for h in heap])
            inc = None
            if best_x is not None:
                inc = MilpSolution(OPTIMAL, best_obj + offset, best_x, nodes, names=problem.names)
            raise NodeLimitError(nodes, inc, open_bound + offset)
        nodes += 1
        depth = -neg_depth

        hook_bound = -math.inf
        if bound_hook is not None:
            hook_bound = bound_hook(lo, hi)
            if hook_bound >= best_obj - PRUNE_TOL:
                _emit(on_node, verbose, NodeEvent(node_id, parent, depth, "pruned", hook_bound, None))
                continue

        sol = solve_dense(lp, lo, hi, backend=backend)
        iterations += sol.iterations
        if sol.status == INFEASIBLE:
            _emit(on_node, verbose, NodeEvent(node_id, parent, depth, INFEASIBLE, math.inf, None))
            continue
        if sol.status == UNBOUNDED:
            _emit(on_node, verbose, NodeEvent(node_id, parent, depth, UNBOUNDED, -math.inf, None))
            if node_id == 0:
                return MilpSolution(UNBOUNDED, -math.inf, sol.values, nodes, names=problem.names,
                                    lp_iterations=iterations)
            continue

        x = sol.values
        bound = max(sol.objective, hook_bound)
        frac = np.abs(x[ints] - np.round(x[ints]))
        branch = None
        if frac.size and frac.max() > INT_TOL:
            branch = int(ints[int(np.argmax(frac))])
        _emit(on_node, verbose, NodeEvent(node_id, parent, depth, OPTIMAL, sol.objective, branch))
        if bound >= best_obj - PRUNE_TOL:
            continue

        if branch is None:
            cand = _round_integral(x, ints)
            obj = float(lp.c @ cand)
            if obj < best_obj - PRUNE_TOL or best_x is None:
                best_x, best_obj = cand, obj
                if verbose:
                    log.debug("node %d: new incumbent %.9g", node_id, obj + offset)
            continue

        val = x[branch]
        up_lo = lo.copy()
        up_lo[branch] = math.ceil(val)
        down_hi = hi.copy()
        down_hi[branch] = math.floor(val)
        heapq.heappush(heap, (neg_depth - 1, bound, seq, seq, node_id, up_lo, hi))
        heapq.heappush(heap, (neg_depth - 1, bound, seq + 1, seq + 1, node_id, lo, down_hi))
        seq += 2

    if best_x is None:
        return MilpSolution(INFEASIBLE, math.nan, np.full(problem.n_vars, np.nan), nodes,
                            names=problem.names, lp_iterations=iterations)
    return MilpSolution(OPTIMAL, best_obj + offset, best_x, nodes, names=problem.names,
                        lp_iterations=iterations)


def _expand_into(sol: MilpSolution, problem: LpProblem) -> MilpSolution:
    if sol.status == OPTIMAL:
        sol.values = problem.reduction.expand(sol.values)
        sol.objective = problem.evaluate(sol.values)
    else:
        sol.values = np.full(problem.n_vars, np.nan)
    sol.names = problem.names
    return sol


def _round_integral(x, ints):
    out = np.array(x, dtype=float)
    out[ints] = np.round(out[ints])
    out[out == 0.0] = 0.0  # drop negative zeros
    return out


def _emit(on_node, verbose, event):
    if on_node is not None:
        on_node(event)
    if verbose:
        log.debug(
            "node %d (parent %d, depth %d): %s obj %.9g%s",
            event.node, event.parent, event.depth, event.status, event.objective,
            "" if event.branch_var is None else f" branch on {event.branch_var}",
        )


def _sum_set(groups, cap: int = 1_000_000):
    """All values of sum_g d_g * n_g with integer n_g in [lo_g, hi_g]; None past ``cap``."""
    sums = np.zeros(1)
    for d, a, b in groups:
        if b > a:
            sums = np.unique(np.round((sums[:, None] + d * np.arange(a, b + 1)).ravel(), 9))
            if sums.size > cap:
                return None
        else:
            sums = sums + d * a
    return sums


def overallocation_bound(instance: Instance, problem: LpProblem, pin: float) -> BoundHook:
    """Combinatorial lower bound on total over-allocation for the second stage.

    Relies on integrality of room counts, which the LP relaxation ignores:
    each department's hours lie on a lattice of room-duration sums, and so
    does the hospital-wide total.  ``pin`` is the right-hand side of the row
    holding sum_j s_j / h_j at the stage-1 optimum.  Works on full and
    pooled models alike.
    """
    cells = capacity_cells(instance, problem)
    n_depts = len(instance.departments)
    targets = instance.targets()
    limits = instance.limits()
    s_cols = np.array([problem.index[("s", j)] for j in range(n_depts)])
    keys = sorted(set(cells.duration.tolist()))
    key_of = np.array([keys.index(d) for d in cells.duration], dtype=np.int64)
    row_key = np.zeros(len(cells.capacity), dtype=np.int64)
    row_key[cells.row] = key_of
    n_keys = len(keys)
    total_target = float(targets.sum())

    def groups(lo_by_key, hi_by_key):
        return [(keys[g], int(lo_by_key[g]), int(hi_by_key[g])) for g in range(n_keys)]

    def hook(lower, upper):
        lo = np.ceil(lower[cells.var] - INT_TOL)
        hi = np.floor(np.minimum(upper[cells.var], cells.capacity[cells.row]) + INT_TOL)
        if np.any(lo > hi):
            return math.inf
        dept_floor = 0.0
        need_total = 0.0
        for j in range(n_depts):
            mine = cells.dept == j
            lo_k = np.bincount(key_of[mine], weights=lo[mine], minlength=n_keys)
            hi_k = np.bincount(key_of[mine], weights=hi[mine], minlength=n_keys)
            sums = _sum_set(groups(lo_k, hi_k))
            if sums is None:
                return -math.inf
            smax = min(limits[j], upper[s_cols[j]], targets[j] * pin)
            reach = sums[sums >= targets[j] - smax - PRUNE_TOL]
            if reach.size == 0:
                return math.inf
            least = float(reach[0])
            dept_floor += max(0.0, least - targets[j])
            need_total += least
        n_rows = len(cells.capacity)
        row_lo = np.bincount(cells.row, weights=lo, minlength=n_rows)
        row_hi = np.minimum(cells.capacity, np.bincount(cells.row, weights=hi, minlength=n_rows))
        if np.any(row_lo > row_hi + INT_TOL):
            return math.inf
        lo_k = np.bincount(row_key, weights=row_lo, minlength=n_keys)
        hi_k = np.bincount(row_key, weights=row_hi, minlength=n_keys)
        totals = _sum_set(groups(lo_k, hi_k))
        if totals is None:
            return dept_floor
        reach = totals[totals >= need_total - PRUNE_TOL]
        if reach.size == 0:
            return math.inf
        return max(dept_floor, float(reach[0]) - total_target)

    return hook


def solve_lexicographic(instance: Instance, *, node_limit: int = NODE_LIMIT, verbose: bool = False,
                        backend: str | None = None, reduce: bool = True, use_bound: bool = True) -> MilpSolution:
    """Minimize relative under-allocation, then total over-allocation among those optima.

    Both stages use the tight (equality goal) formulation with integer rooms;
    stage 2 adds a row holding sum_j s_j / h_j at the stage-1 optimum and
    minimizes sum_j splus_j.  The returned ``objective`` is the stage-1 value
    at the final schedule and ``stage2_objective`` its total over-allocation
    in hours.
    """
    full = build_model(instance, FormulationOptions(integer_rooms=True, tight_mode=True))
    work = full.reduction.problem if reduce else full
    stage1 = branch_and_bound(work, node_limit=node_limit, verbose=verbose, backend=backend)
    if stage1.status != OPTIMAL:
        if reduce:
            _expand_into(stage1, full)
        return stage1

    n_depts = len(instance.departments)
    targets = instance.targets()
    pin = stage1.objective + PIN_TOL
    pin_row = Row({work.index[("s", j)]: 1.0 / targets[j] for j in range(n_depts)}, LE, pin, "pin")
    over = np.zeros(work.n_vars)
    for j in range(n_depts):
        over[work.index[("splus", j)]] = 1.0
    second = work.with_rows([pin_row]).with_objective(over)
    hook = overallocation_bound(instance, second, pin) if use_bound else None
    stage2 = branch_and_bound(second, node_limit=node_limit, verbose=verbose, backend=backend,
                              bound_hook=hook, incumbent=stage1.values)
    if stage2.status != OPTIMAL:
        raise RuntimeError(f"second stage returned {stage2.status} although stage 1 was feasible")
    values = full.reduction.expand(stage2.values) if reduce else stage2.values
    return MilpSolution(
        OPTIMAL,
        full.evaluate(values),
        values,
        stage1.nodes_explored + stage2.nodes_explored,
        stage2_objective=stage2.objective,
        names=full.names,
        lp_iterations=stage1.lp_iterations + stage2.lp_iterations,
    )
