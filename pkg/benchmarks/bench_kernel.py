"""Compare the compiled and pure-Python simplex kernels.

    python benchmarks/bench_kernel.py [--repeat N]

Times the five-day demo instance's LP relaxation, its MILP, the two-stage
lexicographic solve, and the relaxation of a wider synthetic instance
(more departments and days) where the tableau is larger.
"""

import argparse
import statistics
import time

import numpy as np

from otsched import simplex
from otsched.bnb import solve_lexicographic, solve_milp
from otsched.formulation import FormulationOptions, build_model
from otsched.instance import Department, Instance, RoomType, paper_instance


def wide_instance(n_depts=20, n_days=10, seed=7):
    rng = np.random.default_rng(seed)
    rooms = tuple(
        RoomType(f"r{i}", f"r{i}", tuple(float(rng.choice([6.0, 7.5, 8.0, 9.0])) for _ in range(n_days)),
                 tuple(int(rng.integers(2, 6)) for _ in range(n_days)))
        for i in range(6)
    )
    cap = sum(d * a for rt in rooms for d, a in zip(rt.duration_by_day, rt.availability_by_day))
    shares = rng.dirichlet(np.ones(n_depts)) * cap * 0.97
    depts = tuple(Department(f"p{j}", f"p{j}", round(float(h), 1) + 0.1, 10.0) for j, h in enumerate(shares))
    return Instance(tuple(f"d{k}" for k in range(n_days)), rooms, depts)


def timed(fn, repeat):
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs)


def solve_lp_checked(problem, backend):
    sol = simplex.solve_lp(problem, backend=backend)
    assert sol.optimal, sol.status
    return sol


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    demo = paper_instance()
    relaxed = build_model(demo, FormulationOptions(integer_rooms=False))
    integer = build_model(demo)
    wide = build_model(wide_instance(), FormulationOptions(integer_rooms=False))
    cases = [
        ("demo LP relaxation", lambda b: solve_lp_checked(relaxed, b)),
        ("demo MILP", lambda b: solve_milp(integer, backend=b)),
        ("demo lexicographic", lambda b: solve_lexicographic(demo, backend=b)),
        (f"wide LP ({wide.n_rows}x{wide.n_vars})", lambda b: solve_lp_checked(wide, b)),
    ]

    backends = simplex.available_backends()
    if "compiled" not in backends:
        print("compiled kernel not built; timing the Python kernel only")
    print(f"{'case':<30}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in cases:
        times = {b: timed(lambda: fn(b), args.repeat) for b in backends}
        row = f"{name:<30}" + "".join(f"{times[b] * 1e3:>10.1f}ms" for b in backends)
        if len(backends) == 2:
            row += f"{times['python'] / times['compiled']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
