import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imcflab import (RadialGrid, OriginKind, GeometryError, UniformCubic,
                     flat_profile, profile_from_schwarzschild, slice_geometry,
                     curvature_pack, conformal_transform,
                     isotropic_schwarzschild_phi, profile_to_csv,
                     profile_from_csv)


class TestRadialGrid:
    def test_spacing_and_nodes(self):
        grid = RadialGrid(-2.0, 2.0, 17)
        assert grid.spacing == pytest.approx(0.25)
        assert len(grid.nodes) == 17
        assert grid.nodes[0] == -2.0 and grid.nodes[-1] == 2.0

    def test_contains(self):
        grid = RadialGrid(0.0, 1.0, 16)
        assert grid.contains(0.5)
        assert not grid.contains(1.5)

    def test_too_few_nodes_rejected(self):
        with pytest.raises(GeometryError):
            RadialGrid(0.0, 1.0, 4)


class TestUniformCubic:
    def test_exact_on_cubic(self):
        s = np.linspace(0.0, 2.0, 41)
        f = 1.0 + s - 2.0 * s**2 + 0.5 * s**3
        interp = UniformCubic(s, f)
        x = np.linspace(0.05, 1.95, 113)
        assert np.max(np.abs(interp(x) - (1.0 + x - 2.0 * x**2 + 0.5 * x**3))) < 1e-12

    def test_derivative_exact_on_cubic(self):
        s = np.linspace(0.0, 2.0, 41)
        f = s**3
        d = UniformCubic(s, f).derivative()
        x = np.linspace(0.1, 1.9, 57)
        assert np.max(np.abs(d(x) - 3.0 * x**2)) < 1e-10


class TestFlatProfile:
    def test_closed_forms(self):
        metric = flat_profile(0.5, 20.0, 512)
        s = np.linspace(1.0, 15.0, 64)
        assert np.allclose(metric.r_at(s), s, atol=1e-13)
        assert np.allclose(metric.mean_curvature(s), 2.0 / s, atol=1e-12)
        assert np.allclose(metric.scalar_curvature(s), 0.0, atol=1e-10)
        assert np.allclose(metric.area(s), 4.0 * np.pi * s**2, rtol=1e-13)

    def test_rejects_nonpositive_inner_radius(self):
        with pytest.raises(GeometryError):
            flat_profile(0.0, 10.0, 64)


class TestSchwarzschildProfile:
    def test_quasilocal_mass_identity(self, schw_profile):
        # (r/2)(1 - r'^2) = m identically along the profile ODE
        s = np.linspace(0.5, 38.0, 200)
        r = np.asarray(schw_profile.r_at(s))
        rp = np.asarray(schw_profile.rp_at(s))
        assert np.max(np.abs(0.5 * r * (1.0 - rp**2) - 1.0)) < 1e-9

    def test_throat_radius_and_symmetry(self, schw_profile):
        assert float(schw_profile.r_at(0.0)) == pytest.approx(2.0, abs=1e-10)
        s = np.linspace(0.1, 30.0, 50)
        assert np.allclose(schw_profile.r_at(s), schw_profile.r_at(-s),
                           rtol=1e-12)

    def test_vacuum_scalar_curvature(self, schw_profile):
        s = np.linspace(-30.0, 30.0, 101)
        assert np.max(np.abs(schw_profile.scalar_curvature(s))) < 1e-8

    def test_coarse_grid_rejected(self):
        with pytest.raises(GeometryError):
            profile_from_schwarzschild(0.01, 10.0, RadialGrid(-10.0, 10.0, 21))

    def test_grid_must_cover_domain(self):
        with pytest.raises(GeometryError):
            profile_from_schwarzschild(1.0, 40.0, RadialGrid(-10.0, 10.0, 201))


class TestSliceGeometry:
    def test_fields_match_profile(self, schw_profile):
        geom = slice_geometry(schw_profile, 5.0)
        r = float(schw_profile.r_at(5.0))
        rp = float(schw_profile.rp_at(5.0))
        assert geom.area == pytest.approx(4.0 * np.pi * r * r, rel=1e-12)
        assert geom.H == pytest.approx(2.0 * rp / r, rel=1e-12)
        assert geom.lambda1 == geom.lambda2

    def test_curvature_pack_keys(self, schw_profile):
        pack = curvature_pack(schw_profile)
        for key in ("s", "R", "ricci_nn"):
            assert key in pack
        # vacuum: the finite-difference scalar curvature is tiny
        assert np.max(np.abs(pack["R"][5:-5])) < 1e-4


class TestConformal:
    def test_constant_factor_scaling(self, schw_profile):
        c = 1.3
        u = np.full(schw_profile.grid.n, c)
        conf = conformal_transform(schw_profile, u)
        s = np.linspace(1.0, 20.0, 40)
        assert np.allclose(conf.area(s),
                           c**4 * np.asarray(schw_profile.area(s)), rtol=1e-12)
        assert np.allclose(conf.mean_curvature(s),
                           np.asarray(schw_profile.mean_curvature(s)) / c**2,
                           rtol=1e-10)

    def test_constant_factor_curvature(self, flat_metric):
        c = 1.1
        u = np.full(flat_metric.grid.n, c)
        conf = conformal_transform(flat_metric, u)
        # flat base: R_u = R / c^4 = 0
        assert np.max(np.abs(conf.scalar_curvature_nodes()[10:-10])) < 1e-8

    def test_to_profile_preserves_areas(self, example_triple):
        conf = example_triple.metric
        gauge, s_map = conf.to_profile()
        s = np.linspace(-20.0, 20.0, 41)
        assert np.allclose(gauge.area(s_map(s)), conf.area(s), rtol=1e-6)


class TestIsotropic:
    def test_phi_matches_closed_form(self):
        cf = isotropic_schwarzschild_phi(1.0, 32, 16.0)
        rho = cf.radius_grid()
        mask = rho > 2.0
        expected = 1.0 + 1.0 / (2.0 * rho[mask])
        assert np.allclose(cf.phi[mask], expected, rtol=1e-12)

    def test_axis_and_spacing(self):
        cf = isotropic_schwarzschild_phi(1.0, 32, 16.0)
        assert cf.axis[0] == -16.0 and cf.axis[-1] == 16.0
        assert cf.spacing == pytest.approx(32.0 / 31.0)


class TestCsvRoundTrip:
    def test_profile_round_trip_exact(self, schw_profile):
        text = profile_to_csv(schw_profile)
        back = profile_from_csv(text, origin_kind=OriginKind.TWO_ENDED)
        assert np.array_equal(back.r, schw_profile.r)
        assert np.array_equal(back.grid.nodes, schw_profile.grid.nodes)


@given(st.floats(min_value=1.0, max_value=30.0))
@settings(max_examples=25, deadline=None)
def test_flat_mean_curvature_times_radius_is_two(s):
    metric = flat_profile(0.5, 40.0, 512)
    assert float(metric.mean_curvature(s)) * float(metric.r_at(s)) == \
        pytest.approx(2.0, rel=1e-10)
