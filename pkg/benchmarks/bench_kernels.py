"""Benchmark: compiled kernels vs the pure-NumPy fallback.

Times the four hot paths on both backends and prints a comparison table:

    python benchmarks/bench_kernels.py           # full sizes
    python benchmarks/bench_kernels.py --quick   # ~10x smaller

The two backends produce identical results from identical streams (the
path kernels bitwise, the solver to round-off), so the numbers measure
implementation speed only.
"""

import argparse
import time

import numpy as np

import rootbarrier as rb
import rootbarrier._kernels_py as kernels_py
from rootbarrier import RngStream

try:
    import rootbarrier._kernels as kernels_c
except ImportError:
    kernels_c = None


def timeit(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_g_kernel(mod, size):
    rng = np.random.default_rng(0)
    t = np.abs(rng.normal(size=size))
    x = rng.normal(size=size)
    return timeit(lambda: mod.g_kernel(t, x))


def solver_inputs(n):
    mu = rb.make_power_measure(1.0, 1.0)
    xs = np.arange(n + 1) / n
    w = mu.density(xs) / n
    w[-1] *= 0.5
    lhs = rb.dirac_potential(xs) - mu.potential(xs)
    cap = np.full(n, np.inf)
    return lhs, w, xs, cap


def bench_solver(mod, n):
    lhs, w, xs, cap = solver_inputs(n)
    return timeit(lambda: mod.solve_barrier_grid(lhs, w, xs, cap, 4.0, 1e-12), repeat=1)


def bench_hitting(mod, table, n_paths, dt):
    def run():
        s = RngStream(1)
        for i in range(n_paths):
            mod.simulate_hitting_path(
                s.substream(i).bit_generator(), table.r_values, table.h, dt, 0.0, 10.0
            )

    return timeit(run, repeat=1)


def bench_walk(mod, table, n_chains):
    args = (table.r_values, table.h, 0.0, 0.0, 2.0, -1.0, 1.0, 0.0, 1.0, 0,
            0.0, 1.0, 0.002, 10**6)

    def run():
        s = RngStream(2)
        for i in range(n_chains):
            mod.walk_chain_affine(s.substream(i).bit_generator(), *args)

    return timeit(run, repeat=1)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = parser.parse_args()

    q = 10 if args.quick else 1
    g_size = 2_000_000 // q
    solve_n = 300
    paths, dt = 400 // q or 1, 1e-5
    chains = 20_000 // q

    table = rb.solve_barrier(rb.make_power_measure(1.0, 1.0), 500, tol=1e-12)
    backends = [("python", kernels_py)]
    if kernels_c is not None:
        backends.insert(0, ("compiled", kernels_c))
    else:
        print("compiled extension not available; timing the fallback only\n")

    cases = [
        (f"local-time kernel, {g_size:,} evals", lambda m: bench_g_kernel(m, g_size)),
        (f"barrier solve, n={solve_n}", lambda m: bench_solver(m, solve_n)),
        (f"hitting paths, {paths} paths at dt={dt:g}", lambda m: bench_hitting(m, table, paths, dt)),
        (f"walk chains, {chains:,} chains at delta=0.002", lambda m: bench_walk(m, table, chains)),
    ]

    width = max(len(name) for name, _ in cases)
    header = f"{'case':<{width}}  " + "".join(f"{name:>12}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, bench in cases:
        times = [bench(mod) for _, mod in backends]
        row = f"{name:<{width}}  " + "".join(f"{t:>11.3f}s" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
