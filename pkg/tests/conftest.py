"""Shared fixtures.  The reference ground states are reused session-wide."""

import numpy as np
import pytest

from nlslab import GridSpec, solve_ground_state


@pytest.fixture(scope="session")
def standard_grid():
    return GridSpec(1, 4096, 20.0)


@pytest.fixture(scope="session")
def ground_standard(standard_grid):
    return solve_ground_state(standard_grid, 1.0)


@pytest.fixture(scope="session")
def coarse_grid():
    return GridSpec(1, 1024, 12.0)


@pytest.fixture(scope="session")
def ground_coarse(coarse_grid):
    return solve_ground_state(coarse_grid, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)
