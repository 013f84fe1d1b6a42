"""Shared fixtures: one small solved case reused across the unit suites."""

import numpy as np
import pytest

from cutstokes.harness import CaseConfig, build_case
from cutstokes.solver import solve


@pytest.fixture(scope="session")
def case10():
    """Small assembled case (n=10, default circle) shared by the suites."""
    disc, exact, system = build_case(CaseConfig(n=10))
    return disc, exact, system


@pytest.fixture(scope="session")
def sol10(case10):
    _, _, system = case10
    x, report = solve(system)
    assert report.converged
    return x


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
