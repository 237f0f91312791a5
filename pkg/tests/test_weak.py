import io
import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imcflab import (RadialGrid, OriginKind, ProfileMetric, flat_profile,
                     run_classical_flow, extract_level_sets, weak_h_check,
                     minimize_hull, growth_ledger, cartesian_level_area,
                     NonMonotoneU, LevelOutOfRange)
from imcflab.verify import _dumbbell_profile


class TestExtractLevelSets:
    def test_levels_invert_u(self, flat_metric, flat_solution):
        _, sol = flat_solution
        times = np.linspace(0.5, 4.0, 8)
        family = extract_level_sets(sol, flat_metric, times)
        u_at = sol.interp()(family.locations)
        assert np.max(np.abs(u_at - times)) < 1e-10

    def test_non_monotone_rejected(self, flat_metric, flat_solution):
        _, sol = flat_solution
        bad = sol.u.copy()
        bad[100] = bad[120] + 1.0
        broken = type(sol)(s=sol.s, u=bad, gradient_field=sol.gradient_field,
                           residual_norm=sol.residual_norm,
                           iterations=sol.iterations, converged=sol.converged,
                           epsilon=sol.epsilon, L=sol.L,
                           homotopy_steps=sol.homotopy_steps,
                           boundary_inner=sol.boundary_inner,
                           boundary_outer=sol.boundary_outer)
        with pytest.raises(NonMonotoneU):
            extract_level_sets(broken, flat_metric, [1.0])

    def test_level_out_of_range(self, flat_metric, flat_solution):
        _, sol = flat_solution
        with pytest.raises(LevelOutOfRange):
            extract_level_sets(sol, flat_metric, [sol.u[-1] + 1.0])


class TestWeakHCheck:
    def test_identity_gap_within_bound(self, flat_metric, flat_solution):
        prob, sol = flat_solution
        times = np.linspace(0.5, 5.0, 12)
        family = extract_level_sets(sol, flat_metric, times)
        audit = weak_h_check(family, lambda s: 0.0)
        dx = flat_metric.grid.spacing
        max_H = max(surf.H for surf in family.surfaces)
        assert audit["max_gap"] <= 5.0 * (prob.epsilon + dx * dx) * max_H
        assert audit["untrapped"]


class TestMinimizeHull:
    def test_flat_ball_is_its_own_hull(self):
        metric = flat_profile(0.5, 30.0, 1001)
        s0 = float(metric.grid.nodes[100])
        hull = minimize_hull(metric, s0)
        assert hull.s_star == s0
        assert not hull.jumped

    def test_dumbbell_jumps_to_brute_force_argmin(self):
        metric = _dumbbell_profile()
        hull = minimize_hull(metric, 1.0)
        nodes = metric.grid.nodes
        cand = nodes[nodes >= 1.0 - 1e-12]
        areas = np.asarray(metric.area(cand))
        ties = np.nonzero(areas <= np.min(areas) + 1e-12)[0]
        assert hull.jumped
        assert hull.s_star == float(cand[int(ties[-1])])

    def test_idempotent(self):
        metric = _dumbbell_profile()
        first = minimize_hull(metric, 1.0)
        second = minimize_hull(metric, first.s_star)
        assert second.s_star == first.s_star
        assert not second.jumped


@given(depth=st.floats(min_value=0.3, max_value=1.4),
       center=st.floats(min_value=2.0, max_value=5.0))
@settings(max_examples=25, deadline=None)
def test_hull_matches_brute_force_scan(depth, center):
    grid = RadialGrid(0.0, 8.0, 801)
    s = grid.nodes
    r = 2.0 - depth * np.exp(-2.0 * (s - center) ** 2) + 0.05 * s * s
    rp = 4.0 * depth * (s - center) * np.exp(-2.0 * (s - center) ** 2) + 0.1 * s
    metric = ProfileMetric(grid=grid, r=r, r_prime=rp,
                           origin_kind=OriginKind.CENTER_POINT, symmetric=False)
    hull = minimize_hull(metric, 0.5)
    cand = s[s >= 0.5 - 1e-12]
    areas = np.asarray(metric.area(cand))
    ties = np.nonzero(areas <= np.min(areas) + 1e-12)[0]
    assert hull.s_star == float(cand[int(ties[-1])])


class TestGrowthLedger:
    def test_schwarzschild_flow_passes(self, schw_profile):
        trace = run_classical_flow(schw_profile, s0=2.0, t_end=3.0, dt=1e-3)
        ledger = growth_ledger(trace)
        assert ledger.all_passed
        assert ledger.b_prime_lower_bound == 0.0

    def test_csv_export(self, schw_profile):
        trace = run_classical_flow(schw_profile, s0=2.0, t_end=0.5, dt=1e-2)
        ledger = growth_ledger(trace)
        rows = list(csv.DictReader(io.StringIO(ledger.to_csv())))
        assert len(rows) == len(ledger.rows)
        assert all(row["passed"] == "True" for row in rows)

    def test_level_set_family_input(self, flat_metric, flat_solution):
        _, sol = flat_solution
        times = np.linspace(0.5, 5.0, 12)
        family = extract_level_sets(sol, flat_metric, times)
        ledger = growth_ledger(family)
        assert ledger.all_passed


class TestCartesianLevelArea:
    def test_round_sphere_area(self):
        n = 64
        extent = 4.0
        axis = np.linspace(-extent, extent, n)
        X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
        rho = np.sqrt(X**2 + Y**2 + Z**2)
        area = cartesian_level_area(rho, np.ones_like(rho), extent, 2.5)
        assert area == pytest.approx(4.0 * np.pi * 2.5**2, rel=0.01)
