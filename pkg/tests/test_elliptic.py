import numpy as np
import pytest

from imcflab import (flat_profile, EllipticProblem, EllipticError,
                     solve_regularized, barrier_check, epsilon_schedule,
                     subsolution_domain, epsilon_sweep)
from imcflab.verify import _noise_injected_solution


class TestEpsilonSchedule:
    def test_decreases_in_L(self):
        assert epsilon_schedule(8.0) < epsilon_schedule(4.0)

    def test_amplitude_scales(self):
        assert epsilon_schedule(6.0, amplitude=2.0) == \
            pytest.approx(2.0 * epsilon_schedule(6.0))

    def test_problem_enforces_cap(self, flat_metric):
        cap = epsilon_schedule(8.0)
        with pytest.raises(EllipticError):
            EllipticProblem(metric=flat_metric, epsilon=2.0 * cap, L=8.0,
                            s_inner=2.0)


class TestSubsolution:
    def test_outer_boundary_below_grid_edge(self, flat_metric):
        dom = subsolution_domain(flat_metric, 8.0, s_inner=2.0)
        assert 2.0 < dom.s_outer < flat_metric.grid.s_max

    def test_v_vanishes_at_reference(self, flat_metric):
        dom = subsolution_domain(flat_metric, 8.0, s_inner=2.0)
        nodes = flat_metric.grid.nodes
        k = int(np.argmin(np.abs(dom.v)))
        # v = alpha log(r / r_ref) crosses zero at the reference radius
        assert abs(dom.v[k]) < 0.05


class TestFlatSolve:
    def test_converges_to_log_solution(self, flat_solution):
        problem, solution = flat_solution
        assert solution.converged
        assert solution.residual_norm <= 1e-10
        rs = np.linspace(2.0, np.e**3, 400)
        err = np.max(np.abs(solution.interp()(rs) - 2.0 * np.log(rs / 2.0)))
        assert err <= 0.05

    def test_barrier_audit_passes(self, flat_solution):
        problem, solution = flat_solution
        audit = barrier_check(solution, problem)
        assert audit["passed"], audit["violations"]
        assert audit["boundary_gradient"] <= audit["boundary_gradient_bound"]

    def test_solution_bounds(self, flat_solution):
        problem, solution = flat_solution
        assert np.min(solution.u) >= -problem.epsilon - 1e-12
        assert np.max(solution.u) <= problem.L - 2.0 + 1e-12

    def test_noise_injection_fails_barrier(self, flat_solution):
        problem, solution = flat_solution
        audit = barrier_check(_noise_injected_solution(solution), problem)
        assert not audit["passed"]

    def test_csv_export(self, flat_solution):
        _, solution = flat_solution
        text = solution.to_csv()
        assert text.startswith("s,u,grad_u\n")
        assert len(text.splitlines()) == len(solution.s) + 1


class TestRefinement:
    def test_halving_spacing_reduces_error(self):
        """Fixed eps: halving the spacing gains >= 3.5x against a same-scheme
        reference four times finer (the scheme is second order, so ~4x is
        the expected gain)."""
        eps = 1e-3
        errors = {}
        solutions = {}
        for j in (63, 126, 252):
            metric = flat_profile(1.0, 120.0, 119 * j + 1)
            prob = EllipticProblem(metric=metric, epsilon=eps, L=8.0,
                                   s_inner=2.0)
            solutions[j] = solve_regularized(prob)
        ss = np.linspace(2.5, 60.0, 512)
        ref = solutions[252].interp()(ss)
        for j in (63, 126):
            errors[j] = float(np.max(np.abs(solutions[j].interp()(ss) - ref)))
        assert errors[63] / errors[126] >= 3.5

    def test_epsilon_sweep_cauchy(self, flat_metric):
        sweep = epsilon_sweep(flat_metric, 2.0, [4e-3, 2e-3, 1e-3],
                              [8.0, 8.0, 8.0], annulus=(3.0, 15.0))
        diffs = sweep["cauchy_differences"]
        assert diffs == sorted(diffs, reverse=True)


class TestSchwarzschildSolve:
    def test_converges_with_reference_radius(self, schw_profile):
        prob = EllipticProblem(metric=schw_profile, epsilon=1e-2, L=5.5,
                               s_inner=0.25,
                               r_ref=float(schw_profile.r_at(0.25)))
        sol = solve_regularized(prob)
        assert sol.converged
        assert sol.residual_norm <= 1e-10
        assert np.all(np.diff(sol.u) >= -1e-12)
