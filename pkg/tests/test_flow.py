import io
import csv

import numpy as np
import pytest

from imcflab import (flat_profile, run_classical_flow, monotone_quantities,
                     classical_diagnostics, FlowStatus, FlowError,
                     NotOuterUntrapped, flow_gauge)
from imcflab.scenarios import find_horizon


class TestFlatFlow:
    def test_expanding_sphere_exact(self):
        metric = flat_profile(0.5, 30.0, 2001)
        trace = run_classical_flow(metric, s0=1.0, t_end=2.0, dt=1e-3)
        assert trace.status is FlowStatus.COMPLETED
        assert np.max(np.abs(trace.s - np.exp(trace.t / 2.0))) < 1e-10
        assert np.max(np.abs(trace.A - 4.0 * np.pi)) < 1e-10
        assert np.max(np.abs(trace.B)) < 1e-10
        assert np.max(np.abs(trace.m_h)) < 1e-10

    def test_csv_round_trip(self):
        metric = flat_profile(0.5, 30.0, 2001)
        trace = run_classical_flow(metric, s0=1.0, t_end=0.1, dt=1e-2)
        rows = list(csv.DictReader(io.StringIO(trace.to_csv())))
        assert len(rows) == len(trace)
        assert float(rows[-1]["s"]) == trace.s[-1]


class TestSchwarzschildFlow:
    def test_geroch_constancy(self, schw_profile):
        trace = run_classical_flow(schw_profile, s0=2.0, t_end=3.0, dt=1e-3)
        assert np.max(np.abs(trace.m_h - 1.0)) < 1e-8

    def test_monotone_series(self, schw_profile):
        trace = run_classical_flow(schw_profile, s0=2.0, t_end=3.0, dt=1e-3)
        assert np.min(np.diff(trace.A)) >= -1e-9
        assert np.min(np.diff(trace.B)) >= -1e-9
        assert np.min(np.diff(trace.m_h)) >= -1e-9

    def test_trapped_start_rejected(self, schw_profile):
        # H < 0 on the far side of the throat
        with pytest.raises(NotOuterUntrapped):
            run_classical_flow(schw_profile, s0=-5.0, t_end=1.0, dt=1e-3)

    def test_derivative_identities(self, schw_profile):
        trace = run_classical_flow(schw_profile, s0=2.0, t_end=3.0, dt=1e-3)
        mono = monotone_quantities(trace)
        assert mono["A_derivative_check"]["max_gap"] < 1e-6
        assert mono["B_derivative_check"]["max_gap"] < 1e-6

    def test_diagnostics_report(self, schw_profile):
        trace = run_classical_flow(schw_profile, s0=2.0, t_end=1.0, dt=1e-3)
        diag = classical_diagnostics(trace)
        assert isinstance(diag, dict) and diag


class TestWeightedFlow:
    def test_example_flow_monotone(self, example_triple):
        gauge = flow_gauge(example_triple)
        horizon = find_horizon(gauge)
        trace = run_classical_flow(gauge, s0=horizon["s_star"] + 0.05,
                                   t_end=3.0, dt=1e-3)
        assert trace.status is FlowStatus.COMPLETED
        assert np.all(trace.speed > 0.0)
        assert np.min(np.diff(trace.A)) >= -1e-6
        assert np.min(np.diff(trace.m_h)) >= -1e-6

    def test_short_trace_rejected_by_checks(self, schw_profile):
        trace = run_classical_flow(schw_profile, s0=2.0, t_end=1e-3, dt=1e-3)
        with pytest.raises(FlowError):
            monotone_quantities(trace)
