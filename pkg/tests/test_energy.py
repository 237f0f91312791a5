import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imcflab import (flat_profile, weight_from_samples, energy_momentum,
                     dec_residual, smooth_weight, EnergyError, WeightField)
from imcflab.energy import default_phi


@pytest.fixture(scope="module")
def flat_small():
    return flat_profile(0.5, 40.0, 2001)


class TestWeightFromSamples:
    def test_gradient_matches_analytic(self, flat_small):
        s = flat_small.grid.nodes
        h = 0.1 * (1.0 + s * s) ** -1.5
        weight = weight_from_samples(flat_small, h)
        exact = np.abs(-0.3 * s * (1.0 + s * s) ** -2.5)
        assert np.max(np.abs(weight.h_gradnorm[2:-2] - exact[2:-2])) < 1e-4

    def test_decay_constant_finite_for_decaying_h(self, flat_small):
        s = flat_small.grid.nodes
        weight = weight_from_samples(flat_small, (1.0 + s * s) ** -1.5)
        assert np.isfinite(weight.decay_constant)

    def test_grid_mismatch_rejected(self, flat_small):
        with pytest.raises(EnergyError):
            dec_residual(flat_small, WeightField(h=np.zeros(7),
                                                 h_gradnorm=np.zeros(7),
                                                 decay_constant=1.0))


class TestEnergyMomentum:
    def test_vanishing_tau_in_flat_space(self, flat_small):
        mu, j = energy_momentum(flat_small, np.zeros(flat_small.grid.n))
        assert np.max(np.abs(mu)) < 1e-10
        assert np.max(np.abs(j)) < 1e-12

    def test_constant_tau(self, flat_small):
        tau = np.full(flat_small.grid.n, 0.3)
        mu, j = energy_momentum(flat_small, tau)
        assert np.allclose(mu, 0.09 / 3.0 / (8.0 * np.pi), atol=1e-10)
        assert np.max(np.abs(j)) < 1e-12


class TestDecResidual:
    def test_flat_vacuum_passes(self, flat_small):
        weight = weight_from_samples(flat_small, np.zeros(flat_small.grid.n))
        report = dec_residual(flat_small, weight)
        assert report.passed
        assert report.min_residual == pytest.approx(0.0, abs=1e-12)

    def test_flat_with_weight_fails(self, flat_small):
        s = flat_small.grid.nodes
        weight = weight_from_samples(flat_small, 0.05 * (1.0 + s * s) ** -1.5)
        report = dec_residual(flat_small, weight)
        assert not report.passed
        assert report.min_residual < 0.0

    def test_example_satisfies_condition(self, example_triple):
        assert example_triple.dec.passed
        assert example_triple.dec.min_residual >= -1e-10

    def test_report_serializes(self, flat_small):
        weight = weight_from_samples(flat_small, np.zeros(flat_small.grid.n))
        doc = json.loads(dec_residual(flat_small, weight).to_json())
        assert doc["passed"] is True
        assert "min_residual" in doc and "argmin_s" in doc


class TestSmoothWeight:
    def test_dominates_and_stays_close(self, flat_small):
        s = flat_small.grid.nodes
        h = 0.1 * np.exp(-s * s)
        weight = weight_from_samples(flat_small, h)
        delta = 1e-3
        smoothed = smooth_weight(weight, delta, default_phi(s),
                                 flat_small.grid.spacing)
        gap = smoothed.h - np.abs(h)
        assert np.all(gap > 0.0)
        assert np.max(gap) <= delta + 1e-12

    def test_delta_out_of_range(self, flat_small):
        s = flat_small.grid.nodes
        weight = weight_from_samples(flat_small, np.zeros_like(s))
        with pytest.raises(EnergyError):
            smooth_weight(weight, 2.0, default_phi(s), flat_small.grid.spacing)


@given(st.floats(min_value=1e-4, max_value=0.5))
@settings(max_examples=20, deadline=None)
def test_smoothed_weight_always_dominates(delta):
    metric = flat_profile(0.5, 20.0, 257)
    s = metric.grid.nodes
    h = 0.05 * np.sin(s) * (1.0 + s * s) ** -1.5
    weight = weight_from_samples(metric, h)
    smoothed = smooth_weight(weight, delta, default_phi(s), metric.grid.spacing)
    assert np.all(smoothed.h >= np.abs(h))
