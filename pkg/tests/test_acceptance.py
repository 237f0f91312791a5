"""Acceptance gate: the ten pinned criteria, one test and one line each.

Each test runs the corresponding fixture from imcflab.verify (the same code
path as ``imcflab verify``), prints its single pass/fail line with the
measured margins, and asserts the criterion.  Tolerances are stated in the
criterion functions and surfaced here through the details dict.
"""

import pytest

from imcflab.verify import CRITERIA


def _run(number):
    result = CRITERIA[number]()
    print(result.line())
    for key, value in sorted(result.details.items()):
        if key != "checks":
            print(f"    {key} = {value}")
    assert result.passed, (
        f"criterion {number} failed: "
        f"{ {k: v for k, v in result.details['checks'].items() if not v} } "
        f"details={result.details}")
    return result


def test_criterion_01_flat_classical_flow():
    """|s - e^(t/2)|, |A - 4pi|, |B|, |m_h| all <= 1e-8; under 1 s."""
    _run(1)


def test_criterion_02_schwarzschild_flow_constancy():
    """|m_h - 1| <= 1e-6 along the whole flow; under 1 s."""
    _run(2)


def test_criterion_03_penrose_equality_closed_forms():
    """Hawking mass exactly 1 at the horizon; verdict margin exactly 0."""
    _run(3)


def test_criterion_04_flat_elliptic_solve():
    """sup|u - 2 log(r/2)| <= 0.05 on the annulus; barrier audit passes;
    halving eps and spacing gains >= 2x; under 10 s."""
    _run(4)


def test_criterion_05_monotonicity_suite():
    """DEC >= -1e-10; A, B, m_h nondecreasing with slack <= 1e-6;
    growth ledger passes everywhere; under 30 s."""
    _run(5)


def test_criterion_06_strict_generalized_horizon():
    """s* > 0 with H = h > 0; horizon area exceeds the central minimal
    surface; penrose margin >= 0; bound beats m by >= 3 digits."""
    _run(6)


def test_criterion_07_adm_cross_backend():
    """Flux ADM within 1e-3 of the mass and within 1e-6 of the profile
    quasilocal limit; under 60 s."""
    _run(7)


def test_criterion_08_weak_flow_identities():
    """H = |grad u| + h gap within 5(eps + dx^2) max H; e^-t area
    nondecreasing; hull idempotent; dumbbell hull = brute force."""
    _run(8)


def test_criterion_09_blowdown_convergence():
    """Blowdown distances to 2 log|y| strictly decreasing over
    lambda in {1, 1/2, 1/4, 1/8}."""
    _run(9)


def test_criterion_10_negative_controls():
    """DEC flags flat-with-h; barrier fails on noise; --expect-fail
    fixtures exit nonzero."""
    _run(10)
