import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imcflab import (RadialGrid, OriginKind, ProfileMetric, SliceGeometry,
                     flat_profile, profile_from_schwarzschild,
                     isotropic_schwarzschild_phi, hawking_mass, adm_mass,
                     adm_mass_flux, asymptotic_compare, penrose_verdict,
                     blowdown_check, run_classical_flow, MassError,
                     InsufficientExtent)


def _sphere(area, H):
    return SliceGeometry(location=0.0, area=area, H=H, lambda1=H / 2.0,
                         lambda2=H / 2.0, ricci_nn=0.0)


class TestHawkingMass:
    def test_flat_round_sphere_vanishes(self):
        # power-of-two radius: the closed form evaluates to exactly zero
        r = 2.0
        assert hawking_mass(_sphere(4.0 * np.pi * r * r, 2.0 / r), 0.0) == 0.0

    def test_flat_spheres_vanish_to_rounding(self):
        for r in np.linspace(0.7, 23.0, 40):
            m = hawking_mass(_sphere(4.0 * np.pi * r * r, 2.0 / r), 0.0)
            assert abs(m) < 1e-12

    def test_schwarzschild_horizon(self):
        assert hawking_mass(_sphere(16.0 * np.pi, 0.0), 0.0) == 1.0

    def test_generalized_horizon_B_factor_one(self):
        area = 50.0
        m = hawking_mass(_sphere(area, 0.37), 0.37)
        assert m == pytest.approx(np.sqrt(area / (16.0 * np.pi)), rel=1e-14)

    def test_negative_area_rejected(self):
        with pytest.raises(Exception):
            hawking_mass(_sphere(-1.0, 0.0), 0.0)


class TestAdmMass:
    def test_schwarzschild_samples_exact(self, schw_profile):
        report = adm_mass(schw_profile, np.linspace(20.0, 39.0, 8))
        for _, m in report.adm_samples:
            assert m == pytest.approx(1.0, abs=1e-9)
        assert report.adm_extrapolated == pytest.approx(1.0, abs=1e-9)

    def test_flat_space_zero(self):
        metric = flat_profile(0.5, 100.0, 2001)
        report = adm_mass(metric, np.linspace(50.0, 95.0, 6))
        assert report.adm_extrapolated == pytest.approx(0.0, abs=1e-10)

    def test_location_outside_grid_rejected(self, schw_profile):
        with pytest.raises(MassError):
            adm_mass(schw_profile, [100.0])

    def test_non_flat_tail_refused(self):
        grid = RadialGrid(1.0, 100.0, 2001)
        s = grid.nodes
        # r = 1.1 s is a cone, not asymptotically flat
        metric = ProfileMetric(grid=grid, r=1.1 * s,
                               r_prime=np.full(grid.n, 1.1),
                               origin_kind=OriginKind.CENTER_POINT,
                               symmetric=False)
        with pytest.raises(MassError):
            adm_mass(metric, np.linspace(20.0, 90.0, 8))


@pytest.fixture(scope="module")
def flux_report():
    cf = isotropic_schwarzschild_phi(1.0, 96, 40.0)
    return adm_mass_flux(cf, np.linspace(12.0, 35.0, 251))


class TestAdmMassFlux:
    def test_matches_analytic_mass(self, flux_report):
        assert abs(flux_report.adm_extrapolated - 1.0) < 1e-3

    def test_extrapolation_gain_over_largest_sample(self, flux_report):
        rho, sample = max(flux_report.adm_samples, key=lambda rm: rm[0])
        gain = abs(sample - 1.0) / abs(flux_report.adm_extrapolated - 1.0)
        assert gain >= 10.0

    def test_scale_covariance(self, flux_report):
        lam = 2.0
        cf = isotropic_schwarzschild_phi(lam, 96, lam * 40.0)
        scaled = adm_mass_flux(cf, lam * np.linspace(12.0, 35.0, 251))
        assert scaled.adm_extrapolated == \
            pytest.approx(lam * flux_report.adm_extrapolated, rel=1e-12)

    def test_radius_validation(self):
        cf = isotropic_schwarzschild_phi(1.0, 32, 16.0)
        with pytest.raises(MassError):
            adm_mass_flux(cf, [10.0, 20.0])
        with pytest.raises(MassError):
            adm_mass_flux(cf, [10.0])


class TestAsymptoticCompare:
    def test_schwarzschild_flow_margin_zero(self, schw_profile):
        trace = run_classical_flow(schw_profile, s0=2.0, t_end=3.0, dt=1e-3)
        verdict = asymptotic_compare(trace.m_h, 1.0)
        assert verdict["holds"]
        assert verdict["margin"] == pytest.approx(0.0, abs=1e-8)

    def test_decreasing_series_refused(self):
        with pytest.raises(MassError):
            asymptotic_compare(np.array([1.0, 0.9, 0.8]), 1.0)


class TestPenroseVerdict:
    def test_equality_case(self):
        report = penrose_verdict(16.0 * np.pi, 1.0)
        assert report.equality_flag
        assert report.penrose_margin == 0.0

    def test_no_horizon(self):
        report = penrose_verdict(None, 0.7)
        assert "no horizon" in report.verdict
        assert report.penrose_margin == pytest.approx(0.7)

    def test_violation_flagged(self):
        report = penrose_verdict(16.0 * np.pi, 0.5)
        assert report.penrose_margin < 0.0
        assert "VIOLATED" in report.verdict

    def test_negative_area_rejected(self):
        with pytest.raises(MassError):
            penrose_verdict(-1.0, 1.0)

    def test_json_round_trip(self):
        doc = json.loads(penrose_verdict(16.0 * np.pi, 1.2).to_json())
        assert doc["horizon_area"] == pytest.approx(16.0 * np.pi)
        assert doc["equality"] is False


@given(st.floats(min_value=0.1, max_value=10.0))
@settings(max_examples=25, deadline=None)
def test_penrose_margin_scale_covariance(lam):
    area, adm = 30.0, 1.3
    base = penrose_verdict(area, adm).penrose_margin
    scaled = penrose_verdict(lam * lam * area, lam * adm).penrose_margin
    assert scaled == pytest.approx(lam * base, rel=1e-12)


class _FakeSolution:
    def __init__(self, s, u):
        self.s = s
        self.u = u


class TestBlowdown:
    def test_exact_expanding_sphere_distance_zero(self):
        s = np.linspace(0.05, 40.0, 20001)
        sol = _FakeSolution(s, 2.0 * np.log(s))
        report = blowdown_check(sol, [1.0, 0.5, 0.25])
        assert max(report["distances"]) < 2e-5
        assert report["eccentricity"] == 1.0

    def test_truncated_domain_refused(self):
        s = np.linspace(0.5, 4.0, 512)
        sol = _FakeSolution(s, 2.0 * np.log(s))
        with pytest.raises(InsufficientExtent):
            blowdown_check(sol, [0.25])

    def test_lambda_range_validated(self):
        s = np.linspace(0.05, 40.0, 512)
        sol = _FakeSolution(s, 2.0 * np.log(s))
        with pytest.raises(MassError):
            blowdown_check(sol, [2.0])
