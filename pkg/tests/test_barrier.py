import json
import math

import numpy as np
import pytest

import rootbarrier as rb
from rootbarrier import ConfigError, InvariantViolation
from rootbarrier.barrier import GROWTH_CONSTANT


class TestSolveShape:
    def test_boundary_node_is_zero(self, uniform_table):
        assert uniform_table.r_values[-1] == 0.0

    def test_nonincreasing(self, uniform_table):
        assert np.all(np.diff(uniform_table.r_values) <= 1e-10)

    def test_r0_within_known_bounds(self, uniform_table):
        r0 = uniform_table.r_values[0]
        assert rb.R0_LOWER_UNIFORM <= r0 <= rb.R0_UPPER_UNIFORM

    def test_coarse_grid_close_to_fine(self, uniform_table, uniform_table_coarse):
        # common nodes are multiples of k/10; compare up to x = 0.8
        for i in range(9):
            coarse = uniform_table_coarse.r_values[i]
            fine = uniform_table.r_values[i * 50]
            assert abs(coarse - fine) <= 0.05

    def test_no_capped_nodes_for_uniform(self, uniform_table):
        assert uniform_table.solver_meta["capped_nodes"] == []

    def test_meta_fields(self, uniform_table):
        meta = uniform_table.solver_meta
        assert meta["measure"] == {"family": "power", "k": 1.0, "alpha": 1.0}
        assert meta["n"] == 500
        assert meta["tol"] == 1e-12
        assert meta["bisection_iterations"] > 0
        assert meta["solver_version"] == rb.__version__

    def test_arg_validation(self, uniform_measure):
        with pytest.raises(ConfigError):
            rb.solve_barrier(uniform_measure, 1)
        with pytest.raises(ConfigError):
            rb.solve_barrier(uniform_measure, 100, tol=0.0)


class TestGridBehaviour:
    def test_convergence_under_refinement(self, uniform_measure):
        tables = {n: rb.solve_barrier(uniform_measure, n, tol=1e-12) for n in (50, 100, 200, 400)}
        # common nodes: multiples of k/50 up to 0.9 k
        idx50 = np.arange(0, 46)
        diffs = []
        for n in (50, 100, 200):
            a = tables[n].r_values[idx50 * (n // 50)]
            b = tables[2 * n].r_values[idx50 * (2 * n // 50)] if 2 * n in tables else None
            if b is None:
                b = rb.solve_barrier(uniform_measure, 2 * n, tol=1e-12).r_values[idx50 * (2 * n // 50)]
            diffs.append(np.abs(a - b))
        assert np.all(diffs[1] <= diffs[0] + 1e-12)
        assert np.all(diffs[2] <= diffs[1] + 1e-12)

    def test_brownian_scaling(self, uniform_measure):
        # barrier of U[-c, c] is c^2 times the unit barrier at x/c
        unit = rb.solve_barrier(uniform_measure, 200, tol=1e-12)
        wide = rb.solve_barrier(rb.make_power_measure(2.0, 1.0), 200, tol=1e-12)
        np.testing.assert_allclose(wide.r_values, 4.0 * unit.r_values, atol=1e-8)

    def test_tabulated_measure_solves_like_power(self, uniform_measure):
        # a tabulated uniform density must reproduce the power-family barrier
        table_mu = rb.make_table_measure(1.0, np.full(6, 3.0))
        a = rb.solve_barrier(table_mu, 100, tol=1e-12)
        b = rb.solve_barrier(uniform_measure, 100, tol=1e-12)
        np.testing.assert_allclose(a.r_values, b.r_values, atol=1e-10)
        assert rb.check_growth_bound(a, table_mu, 0.5).passed


class TestEvaluate:
    def test_zero_at_support_edge(self, uniform_table):
        assert rb.evaluate_barrier(uniform_table, uniform_table.k) == 0.0

    def test_zero_outside(self, uniform_table):
        assert rb.evaluate_barrier(uniform_table, 3.0) == 0.0
        assert rb.evaluate_barrier(uniform_table, -1.0001) == 0.0

    def test_even(self, uniform_table):
        xs = np.linspace(0.0, 1.2, 37)
        np.testing.assert_array_equal(
            rb.evaluate_barrier(uniform_table, xs), rb.evaluate_barrier(uniform_table, -xs)
        )

    def test_midpoint_interpolation(self, uniform_table):
        rv = uniform_table.r_values
        h = uniform_table.h
        got = rb.evaluate_barrier(uniform_table, 0.5 * h)
        assert got == pytest.approx(0.5 * (rv[0] + rv[1]), rel=1e-14)

    def test_callable_form(self, uniform_table):
        assert uniform_table(0.25) == rb.evaluate_barrier(uniform_table, 0.25)


class TestResiduals:
    def test_solver_output_residual_small(self, uniform_table, uniform_measure):
        rep = rb.residuals(uniform_table, uniform_measure)
        assert rep.max_abs_residual <= 1e-8

    def test_residual_small_for_n1000(self, uniform_measure):
        table = rb.solve_barrier(uniform_measure, 1000, tol=1e-12)
        assert rb.residuals(table, uniform_measure).max_abs_residual <= 1e-8

    def test_zero_table_residual_is_potential_gap(self, uniform_measure):
        # with r identically zero every kernel term vanishes
        table = rb.BarrierTable(k=1.0, r_values=np.zeros(101))
        rep = rb.residuals(table, uniform_measure)
        assert rep.residuals[0] == pytest.approx(-0.5, abs=1e-15)

    def test_perturbation_moves_residual(self, uniform_table, uniform_measure):
        rv = uniform_table.r_values.copy()
        i = 250
        base = abs(rb.residuals(uniform_table, uniform_measure).residuals[i])
        rv[i] += 0.1
        bumped = rb.BarrierTable(k=1.0, r_values=rv, validate=False)
        moved = abs(rb.residuals(bumped, uniform_measure).residuals[i])
        assert moved - base >= 1e-6

    def test_measure_mismatch_rejected(self, uniform_table):
        with pytest.raises(ConfigError):
            rb.residuals(uniform_table, rb.make_power_measure(2.0, 1.0))


class TestGrowthBound:
    def test_uniform_passes(self, uniform_table, uniform_measure):
        rep = rb.check_growth_bound(uniform_table, uniform_measure, 0.5)
        assert rep.passed and bool(rep)
        assert rep.worst_slack >= 0.0
        assert rep.pairs_checked > 0

    def test_power2_passes(self, power2_table, power2_measure):
        assert rb.check_growth_bound(power2_table, power2_measure, 0.5).passed

    def test_matches_direct_evaluation(self, uniform_table, uniform_measure):
        # oracle: evaluate both sides of the bound by hand for the first pair
        eta, k = 0.5, 1.0
        x, y = eta * k, k
        lhs = rb.evaluate_barrier(uniform_table, x)
        ratio = uniform_measure.half_mass(x) / uniform_measure.half_mass(y)
        rhs = rb.evaluate_barrier(uniform_table, y) + GROWTH_CONSTANT * y * y * (
            math.log(4.0 / math.pi) + abs(math.log(ratio))
        )
        rep = rb.check_growth_bound(uniform_table, uniform_measure, eta)
        assert rep.worst_slack <= rhs - lhs + 1e-15

    def test_degenerate_pair_inequality_is_trivial(self):
        # at x = y the bound reduces to 0 <= (32 x^2 / pi^2) ln(4/pi) > 0
        assert GROWTH_CONSTANT * math.log(4.0 / math.pi) > 0.0

    @pytest.mark.parametrize("eta", [0.0, 1.0, 1.5])
    def test_eta_domain(self, eta, uniform_table, uniform_measure):
        with pytest.raises(ConfigError):
            rb.check_growth_bound(uniform_table, uniform_measure, eta)


class TestTableValidation:
    def test_nonzero_edge_rejected(self):
        with pytest.raises(InvariantViolation):
            rb.BarrierTable(k=1.0, r_values=np.array([0.5, 0.4, 0.1]))

    def test_increasing_rejected(self):
        with pytest.raises(InvariantViolation):
            rb.BarrierTable(k=1.0, r_values=np.array([0.1, 0.4, 0.0]))

    def test_negative_rejected(self):
        with pytest.raises(InvariantViolation):
            rb.BarrierTable(k=1.0, r_values=np.array([0.5, -0.2, 0.0]))

    def test_nan_rejected(self):
        with pytest.raises(InvariantViolation):
            rb.BarrierTable(k=1.0, r_values=np.array([np.nan, 0.1, 0.0]))

    def test_validate_off_for_synthetic_tables(self):
        table = rb.BarrierTable(k=1.0, r_values=np.full(5, 0.3), validate=False)
        assert table.r_values[-1] == 0.3


class TestCsvRoundTrip:
    def test_round_trip(self, uniform_table, tmp_path):
        path = tmp_path / "barrier.csv"
        uniform_table.save_csv(path)
        loaded = rb.BarrierTable.load_csv(path)
        np.testing.assert_array_equal(loaded.r_values, uniform_table.r_values)
        assert loaded.k == uniform_table.k
        assert loaded.solver_meta == uniform_table.solver_meta

    def test_format(self, uniform_table, tmp_path):
        path = tmp_path / "barrier.csv"
        uniform_table.save_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("#")
        json.loads(lines[0][1:])
        assert len(lines) == uniform_table.n + 2
        x0, r0 = lines[1].split(",")
        assert float(x0) == 0.0
        # 17 significant digits survive the round trip exactly
        assert float(r0) == uniform_table.r_values[0]

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.0,0.5\n1.0,0.0\n")
        with pytest.raises(ConfigError):
            rb.BarrierTable.load_csv(path)

    def test_non_ascending_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text('#{}\n0.0,0.5\n0.0,0.4\n1.0,0.0\n')
        with pytest.raises(ConfigError):
            rb.BarrierTable.load_csv(path)

    def test_uneven_grid_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text('#{}\n0.0,0.5\n0.7,0.4\n1.0,0.0\n')
        with pytest.raises(ConfigError):
            rb.BarrierTable.load_csv(path)
