import numpy as np
import pytest

from imcflab import (RadialGrid, flat_profile, profile_from_schwarzschild,
                     build_example, EllipticProblem, solve_regularized)


@pytest.fixture(scope="session")
def schw_profile():
    """Schwarzschild m=1 profile in proper-length gauge."""
    return profile_from_schwarzschild(1.0, 40.0, RadialGrid(-40.0, 40.0, 8001))


@pytest.fixture(scope="session")
def flat_metric():
    return flat_profile(1.0, 250.0, 4096)


@pytest.fixture(scope="session")
def example_triple():
    return build_example(1.0, 1e-2, RadialGrid(-40.0, 40.0, 8001))


@pytest.fixture(scope="session")
def flat_solution(flat_metric):
    problem = EllipticProblem(metric=flat_metric, epsilon=1e-3, L=8.0,
                              s_inner=2.0)
    return problem, solve_regularized(problem)
