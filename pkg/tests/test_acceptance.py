"""Acceptance suite: every release criterion at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line
per criterion.  The heavy path-simulation batches share module-scoped
fixtures; worker parallelism never changes results (one substream per
sample), so the reference workers=1 numbers are what every run reproduces.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

import rootbarrier as rb
from rootbarrier import RngStream

WORKERS = min(2, os.cpu_count() or 1)
SEED = 20260808


def report(num, ok, detail):
    print(f"\n[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {num}: {detail}"


@pytest.fixture(scope="module")
def timed_uniform_solve(uniform_measure):
    start = time.perf_counter()
    table = rb.solve_barrier(uniform_measure, 500, tol=1e-12)
    return table, time.perf_counter() - start


@pytest.fixture(scope="module")
def embedding_runs(timed_uniform_solve):
    table, _ = timed_uniform_solve
    runs = {}
    start = time.perf_counter()
    for i, dt in enumerate([4e-5, 2e-5, 1e-5]):
        runs[dt] = rb.ks_embedding_test(
            table, 10**5, dt, RngStream(SEED).substream(i), workers=WORKERS
        )
    return runs, time.perf_counter() - start


@pytest.fixture(scope="module")
def delta_sweep(timed_uniform_solve, example_domain_acc):
    table, _ = timed_uniform_solve
    deltas = np.linspace(0.001, 0.01, 10)
    stats = []
    per_delta = []
    for i, d in enumerate(deltas):
        start = time.perf_counter()
        stats.append(
            rb.solve_pde(example_domain_acc, table, 0.0, 1.0, float(d), 10**4,
                         RngStream(SEED).substream(100 + i), workers=WORKERS)
        )
        per_delta.append(time.perf_counter() - start)
    return stats, per_delta


@pytest.fixture(scope="module")
def example_domain_acc():
    return rb.example51_domain()


def test_criterion_1_barrier_bounds_and_runtime(timed_uniform_solve, tmp_path):
    table, elapsed = timed_uniform_solve
    r0 = float(table.r_values[0])
    start = time.perf_counter()
    res = _cli("solve-barrier", "--family", "power", "--k", "1", "--alpha", "1",
               "--n", "500", "--tol", "1e-12", "--out", str(tmp_path / "b.csv"))
    cli_elapsed = time.perf_counter() - start
    ok = (
        rb.R0_LOWER_UNIFORM <= r0 <= rb.R0_UPPER_UNIFORM
        and elapsed <= 3.0
        and res.returncode == 0
        and cli_elapsed <= 3.0
    )
    report(1, ok,
           f"r(0) = {r0:.6f} in [{rb.R0_LOWER_UNIFORM:.5f}, {rb.R0_UPPER_UNIFORM:.5f}], "
           f"solve time {elapsed:.2f}s <= 3s, CLI end-to-end {cli_elapsed:.2f}s <= 3s")


def test_criterion_2_grid_stability(timed_uniform_solve, uniform_table_coarse):
    table, _ = timed_uniform_solve
    worst = max(
        abs(uniform_table_coarse.r_values[i] - table.r_values[i * 50]) for i in range(9)
    )
    ok = worst <= 0.05
    report(2, ok, f"max |r_10 - r_500| on common nodes x <= 0.8 is {worst:.4f} <= 0.05")


def test_criterion_3_shape_properties(timed_uniform_solve, uniform_measure,
                                      power2_table, power2_measure):
    table, _ = timed_uniform_solve
    checks = []
    for tab, mu, label in [
        (table, uniform_measure, "uniform"),
        (power2_table, power2_measure, "power(alpha=2)"),
    ]:
        edge = tab.r_values[-1] == 0.0
        mono = bool(np.all(np.diff(tab.r_values) <= 1e-10))
        growth = rb.check_growth_bound(tab, mu, 0.5)
        checks.append((label, edge, mono, growth.passed, growth.worst_slack))
    ok = all(e and m and g for _, e, m, g, _ in checks)
    detail = "; ".join(
        f"{lab}: r(k)=0 {e}, nonincreasing {m}, growth bound {g} (slack {s:.2e})"
        for lab, e, m, g, s in checks
    )
    report(3, ok, detail)


def test_criterion_4_embedding_law(embedding_runs):
    runs, elapsed = embedding_runs
    fine = runs[1e-5]
    ks_seq = [runs[dt].ks_statistic for dt in (4e-5, 2e-5, 1e-5)]
    gap_seq = [runs[dt].stop_identity_gap for dt in (4e-5, 2e-5, 1e-5)]
    bias_decreases = ks_seq[0] >= ks_seq[1] >= ks_seq[2] and gap_seq[0] >= gap_seq[1] >= gap_seq[2]
    ks_ok = fine.ks_statistic <= fine.ks_threshold
    drift = abs(runs[4e-5].mean_tau - fine.mean_tau)
    wald_ok = abs(fine.mean_tau - 1.0 / 3.0) <= 3.0 * fine.mean_tau_se + drift
    identity_ok = fine.stop_identity_slack <= 1e-12
    runtime_ok = elapsed <= 600.0
    ok = bias_decreases and ks_ok and wald_ok and identity_ok and runtime_ok
    report(
        4, ok,
        f"KS {fine.ks_statistic:.5f} <= {fine.ks_threshold:.5f} at n=1e5, dt=1e-5; "
        f"bias decreasing over refinements (KS {ks_seq}, gap {gap_seq}); "
        f"E[tau] = {fine.mean_tau:.6f} vs 1/3 within 3SE+drift "
        f"({3 * fine.mean_tau_se + drift:.2e}); stopping-identity slack "
        f"{fine.stop_identity_slack:.2e} <= 0; runtime {elapsed:.0f}s <= 600s",
    )


def test_criterion_5_increment_hard_bounds(timed_uniform_solve, embedding_runs):
    table, _ = timed_uniform_solve
    runs, _ = embedding_runs
    dt, dx, _ = rb.sample_increments(table, 1.0, RngStream(SEED, 9).generator(), 10**6)
    r0 = float(table.r_values[0])
    bounds_ok = bool(np.all(dt <= r0) and np.all(np.abs(dx) <= 1.0))
    exc = max(runs[d].max_excursion for d in runs)
    exc_ok = exc <= 2.0
    ok = bounds_ok and exc_ok
    report(5, ok,
           f"1e6 increments: max dt = {dt.max():.6f} <= r(0) = {r0:.6f}, "
           f"max |dx| = {np.abs(dx).max():.6f} <= 1; "
           f"max in-path excursion {exc:.4f} <= 2")


def test_criterion_6_example_reproduction(delta_sweep):
    stats, per_delta = delta_sweep
    failures = [
        (s.delta, s.estimate, s.std_error)
        for s in stats
        if abs(s.estimate - 40.0) > 3.0 * s.std_error + 5.0 * s.delta
    ]
    runtime_ok = max(per_delta) <= 120.0
    ok = not failures and runtime_ok
    worst = max(abs(s.estimate - 40.0) for s in stats)
    report(6, ok,
           f"u(0,1)=40 reproduced for all 10 deltas (worst |err| {worst:.3f}, "
           f"tolerance 3*SE+5*delta); max per-delta runtime {max(per_delta):.1f}s "
           f"<= 120s; failures: {failures}")


def test_criterion_7_step_count_law(delta_sweep):
    stats, _ = delta_sweep
    deltas = np.array([s.delta for s in stats])
    steps = np.array([s.mean_steps for s in stats])
    design = np.vstack([np.log(1.0 / deltas), np.ones_like(deltas)]).T
    coef, *_ = np.linalg.lstsq(design, steps, rcond=None)
    resid = steps - design @ coef
    r2 = 1.0 - float(np.sum(resid**2) / np.sum((steps - steps.mean()) ** 2))
    ratio = steps[0] / steps[-1]
    ok = r2 >= 0.9 and ratio <= 50.0
    report(7, ok,
           f"mean_steps vs log(1/delta): R^2 = {r2:.4f} >= 0.9; "
           f"steps({deltas[0]:.3f})/steps({deltas[-1]:.3f}) = {ratio:.2f} <= 50")


def test_criterion_8_obstacle_residuals(timed_uniform_solve, uniform_measure):
    table, _ = timed_uniform_solve
    t_grid = np.linspace(0.0, 1.1 * float(table.r_values[0]), 50)
    x_grid = np.linspace(-1.0, 1.0, 50)
    curve_x = np.linspace(0.0, 1.0, 20)
    rep = rb.obstacle_check(table, uniform_measure, t_grid, x_grid, curve_x=curve_x)
    # one refinement validates the quadrature budget on a subgrid
    sub_t, sub_x = t_grid[::12], x_grid[::12]
    coarse = rb.obstacle_check(table, uniform_measure, sub_t, sub_x, curve_x=curve_x[::6])
    refined = rb.obstacle_check(table, uniform_measure, sub_t, sub_x,
                                curve_x=curve_x[::6], n_space=320, n_time=192)
    stable = (
        abs(coarse.max_obstacle_gap - refined.max_obstacle_gap) <= 2e-4
        and abs(coarse.max_curve_gap - refined.max_curve_gap) <= 2e-4
    )
    ok = rep.max_obstacle_gap <= 1e-3 and rep.max_curve_gap <= 1e-3 and stable
    report(8, ok,
           f"(u_mu - u^r)+ max = {rep.max_obstacle_gap:.2e} <= 1e-3 on 50x50; "
           f"|u^r(r(x),x) - u_mu(x)| max = {rep.max_curve_gap:.2e} <= 1e-3 at 20 nodes; "
           f"refinement shift {abs(coarse.max_obstacle_gap - refined.max_obstacle_gap):.1e}, "
           f"{abs(coarse.max_curve_gap - refined.max_curve_gap):.1e} <= 2e-4")


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "rootbarrier.cli", *args],
                          capture_output=True, text=True)


def test_criterion_9_determinism(tmp_path):
    barrier = tmp_path / "b.csv"
    problem = tmp_path / "p.json"
    problem.write_text(json.dumps({
        "T": 1.0,
        "lower": {"kind": "affine", "a": 0.0, "b": 0.0},
        "upper": {"kind": "affine", "a": 2.0, "b": -1.0},
        "boundary_data": {"kind": "polynomial-example51"},
        "rho": "default",
    }))
    commands = {
        "solve-barrier": ["solve-barrier", "--family", "power", "--k", "1",
                          "--alpha", "1", "--n", "100", "--out", str(barrier)],
        "sample": ["sample", "--barrier", str(barrier), "--eps", "1.0", "--n", "200",
                   "--seed", "11", "--out", str(tmp_path / "inc.csv")],
        "verify-embedding": ["verify-embedding", "--barrier", str(barrier),
                             "--paths", "1000", "--dt", "1e-3", "--seed", "12",
                             "--workers", "1", "--out", str(tmp_path / "rep.json")],
        "solve-pde": ["solve-pde", "--config", str(problem), "--barrier", str(barrier),
                      "--t0", "0", "--x0", "1", "--delta", "0.01", "--samples", "100",
                      "--seed", "13", "--workers", "1", "--out", str(tmp_path / "st.json")],
        "sweep-delta": ["sweep-delta", "--config", str(problem), "--barrier", str(barrier),
                        "--t0", "0", "--x0", "1", "--deltas", "0.005:0.01:3",
                        "--samples", "50", "--seed", "14", "--workers", "1",
                        "--out", str(tmp_path / "sw.csv")],
    }
    mismatches = []
    for name, args in commands.items():
        out_path = args[args.index("--out") + 1]
        res = _cli(*args)
        assert res.returncode == 0, f"{name}: {res.stderr}"
        first = open(out_path, "rb").read()
        res = _cli(*args)
        assert res.returncode == 0, f"{name}: {res.stderr}"
        if open(out_path, "rb").read() != first:
            mismatches.append(name)
    ok = not mismatches
    report(9, ok, f"all subcommands byte-identical on rerun at fixed seed "
                  f"(workers=1); mismatches: {mismatches}")
