"""Error norms, observed rates, and report emission."""

import dataclasses
import math

import numpy as np
import pytest

from rdgdm.exceptions import NormalizationError
from rdgdm.harness import (
    ConvergenceReport,
    emit_report,
    error_norms,
    observed_rate,
    parse_report_csv,
    run_convergence,
)
from rdgdm.mesh import generate_family
from rdgdm.rdsolver import TimeGrid, march

TABLE_LEVEL0_ERR_U = 0.004738288  # reference level-0 relative L2 error for u


def _constant_problem(heat, value):
    const = lambda x, y, t: np.full_like(x, value)
    return dataclasses.replace(
        heat,
        name="const",
        u_ini=lambda x, y: np.full_like(x, value),
        v_ini=lambda x, y: np.full_like(x, value),
        dirichlet_u=const,
        dirichlet_v=const,
        exact_u=const,
        exact_v=const,
        grad_u=lambda x, y, t: np.column_stack((np.ones_like(x), np.ones_like(x))),
        grad_v=lambda x, y, t: np.column_stack((np.ones_like(x), np.ones_like(x))),
    )


class TestErrorNorms:
    def test_exactly_interpolated_constants_give_zero_l2(self, hmm_cart0, heat):
        # constants are reproduced exactly by the interpolant, so the solution
        # equals the exact one at every sampled point
        problem = _constant_problem(heat, 0.7)
        grid = TimeGrid(np.array([0.0]))
        sol = march(hmm_cart0, problem, grid)
        # exact gradients are nonzero in the fake problem; only check L2 parts
        qw = hmm_cart0.quad_weights
        xc = hmm_cart0.value_points
        diff = problem.exact_u(xc[:, 0], xc[:, 1], 0.0) - hmm_cart0.cell_values(sol.u[0])
        assert math.sqrt(qw @ (diff * diff)) == 0.0

    def test_constant_offset_has_known_l2_error(self, hmm_cart0, heat):
        problem = _constant_problem(heat, 0.7)
        grid = TimeGrid(np.array([0.0]))
        sol = march(hmm_cart0, problem, grid)
        sol.u[0] += 0.05  # shift the discrete state by c = 0.05
        norms = _l2_only(hmm_cart0, grid, sol, problem)
        # relative error = |c| / 0.7 on the unit-area domain
        assert norms == pytest.approx(0.05 / 0.7, abs=1e-13)

    def test_zero_exact_norm_rejected(self, hmm_cart0, heat):
        problem = _constant_problem(heat, 0.0)
        grid = TimeGrid(np.array([0.0]))
        sol = march(hmm_cart0, problem, grid)
        with pytest.raises(NormalizationError):
            error_norms(hmm_cart0, grid, sol, problem)

    def test_missing_exact_solution_rejected(self, hmm_cart0):
        from rdgdm.problems import fhn_demo

        problem = fhn_demo()
        grid = TimeGrid(np.array([0.0]))
        sol = march(hmm_cart0, problem, grid)
        with pytest.raises(ValueError, match="no exact solution"):
            error_norms(hmm_cart0, grid, sol, problem)


def _l2_only(gd, grid, sol, problem):
    qw = gd.quad_weights
    xc = gd.value_points
    worst = 0.0
    for n, t in enumerate(grid.times):
        vals = problem.exact_u(xc[:, 0], xc[:, 1], t)
        den = math.sqrt(qw @ (vals * vals))
        diff = vals - gd.cell_values(sol.u[n])
        worst = max(worst, math.sqrt(qw @ (diff * diff)) / den)
    return worst


class TestRates:
    def test_synthetic_sequences_recover_exact_order(self):
        hs = [0.2, 0.1, 0.05, 0.025]
        for p in (1, 2):
            errs = [3.7 * h**p for h in hs]
            for i in range(3):
                rate = observed_rate(errs[i], errs[i + 1], hs[i], hs[i + 1])
                assert rate == pytest.approx(p, abs=1e-12)

    def test_non_halving_refinement_uses_log_ratio(self):
        rate = observed_rate(9.0, 1.0, 3.0, 1.0)
        assert rate == pytest.approx(2.0, abs=1e-12)


class TestReportEmission:
    def _report(self, levels):
        from rdgdm.harness import ErrorNorms

        report = ConvergenceReport("fake", "hmm", "triangular", "quadratic")
        h = 0.125
        for level in range(levels):
            report.add_level(
                h,
                8 * 2**level,
                100,
                ErrorNorms(
                    err_u_l2=0.01 * h**2,
                    err_v_l2=0.02 * h**2,
                    err_gu=0.5 * h,
                    err_gv=0.6 * h,
                    e0_u=0.0,
                    e0_v=0.0,
                ),
            )
            h /= 2.0
        return report

    def test_four_levels_three_rate_entries(self, tmp_path):
        paths = emit_report(self._report(4), tmp_path)
        cols = parse_report_csv(paths["csv"])
        assert len(cols["h"]) == 4
        for key in ("rate_u", "rate_v", "rate_gu", "rate_gv"):
            assert len(cols[key]) == 3
        assert (tmp_path / "convergence.png").exists()

    def test_single_level_rates_empty(self, tmp_path):
        paths = emit_report(self._report(1), tmp_path)
        cols = parse_report_csv(paths["csv"])
        assert len(cols["h"]) == 1
        assert len(cols["rate_u"]) == 0

    def test_csv_round_trip_matches_in_memory_rates(self, tmp_path):
        report = self._report(4)
        paths = emit_report(report, tmp_path)
        cols = parse_report_csv(paths["csv"])
        for key, col in (
            ("err_u", "err_u"),
            ("err_gu", "err_gu"),
        ):
            recomputed = [
                observed_rate(cols[col][i], cols[col][i + 1], cols["h"][i], cols["h"][i + 1])
                for i in range(3)
            ]
            for ours, theirs in zip(report.rates(key), recomputed):
                assert abs(ours - theirs) <= 1e-9

    def test_empty_report_rejected(self, tmp_path):
        report = ConvergenceReport("fake", "hmm", "triangular", "quadratic")
        with pytest.raises(ValueError):
            emit_report(report, tmp_path)


class TestConvergenceRuns:
    def test_needs_two_levels(self, heat):
        with pytest.raises(ValueError):
            run_convergence(heat, levels=1)

    def test_heat_second_order_with_p1(self, heat):
        report = run_convergence(
            heat,
            scheme="p1",
            family="triangular",
            levels=3,
            dt_scaling="quadratic",
            base_steps=8,
        )
        for rate in report.rates("err_u"):
            assert 1.7 <= rate <= 2.3
        for rate in report.rates("err_v"):
            assert 1.7 <= rate <= 2.3

    def test_benchmark_level0_error_near_reference_value(self, anis):
        report = run_convergence(
            anis, scheme="hmm", family="triangular", levels=2, dt_scaling="quadratic"
        )
        # loose: stabilization and step sizes differ between implementations
        assert report.err_u[0] <= 3.0 * TABLE_LEVEL0_ERR_U
        assert report.err_u[0] >= TABLE_LEVEL0_ERR_U / 3.0

    def test_hexagonal_errors_decrease(self, anis):
        report = run_convergence(
            anis, scheme="hmm", family="hexagonal", levels=2, dt_scaling="quadratic"
        )
        for key in ("err_u", "err_v", "err_gu", "err_gv"):
            errs = getattr(report, key)
            assert errs[1] < errs[0]
