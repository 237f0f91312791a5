"""A weighted data set with a strictly stronger Penrose bound.

build_example perturbs doubled Schwarzschild (m = 1) with a decaying
weight h so that the energy condition R + (3/2)h^2 - 2|grad h| >= 0
still holds. The generalized horizon (H = |h| > 0) then sits strictly
outside the minimal surface, so

    sqrt(area(horizon) / 16 pi)  >  m

gives a strictly stronger lower bound on the ADM mass than the classical
Penrose inequality. This script builds the data, verifies the energy
condition, finds the horizon, flows outward from it, and reports the
margins.
"""

import numpy as np

from imcflab import (RadialGrid, build_example, flow_gauge, run_classical_flow,
                     growth_ledger, adm_mass, penrose_verdict)
from imcflab.scenarios import find_horizon


def main():
    grid = RadialGrid(-40.0, 40.0, 8001)
    triple = build_example(1.0, 1e-2, grid)
    print(f"provenance: {triple.provenance.value}")
    print(f"energy condition passed: {triple.dec.passed}")
    print(f"min residual: {triple.dec.min_residual:.3e} "
          f"(at s = {triple.dec.argmin_s:.3f})")

    horizon = find_horizon(triple)
    print(f"\ngeneralized horizon: s* = {horizon['s_star']:.6f} "
          f"({horizon['kind']}), area = {horizon['area']:.6f}")
    print(f"minimal surface at s = 0: area = "
          f"{horizon['s0_minimal']['area']:.6f} (strictly smaller)")

    # Work in the gauge where the metric is again a profile ds^2 + r^2 g_S2.
    gauge = flow_gauge(triple)
    horizon_g = find_horizon(gauge)

    # Flow outward from just outside the horizon: A, B, m_h nondecreasing,
    # and every growth-ledger interval inequality holds.
    trace = run_classical_flow(gauge, s0=horizon_g["s_star"] + 0.05,
                               t_end=3.0, dt=1e-3)
    ledger = growth_ledger(trace)
    print(f"\nflow steps: {len(trace)}")
    print(f"min step of m_h: {np.min(np.diff(trace.m_h)):.3e}")
    print(f"growth ledger: {len(ledger.rows)} intervals, "
          f"all passed = {ledger.all_passed}")

    # Total mass and the two Penrose-type margins.
    report = adm_mass(gauge.metric, np.linspace(25.0, 38.0, 8))
    verdict = penrose_verdict(horizon["area"], report.adm_extrapolated)
    bound = np.sqrt(horizon["area"] / (16.0 * np.pi))
    print(f"\nADM mass           = {report.adm_extrapolated:.6f}")
    print(f"horizon bound      = {bound:.6f}  (> m = 1: strictly stronger)")
    print(f"penrose margin     = {verdict.penrose_margin:.6f}")
    print(verdict.verdict)


if __name__ == "__main__":
    main()
