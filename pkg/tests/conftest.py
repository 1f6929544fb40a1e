import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pharmonic import (  # noqa: E402
    ModelParameters,
    SolverConfig,
    integrate,
    make_domain_warp,
    make_euclidean_warp,
    make_target_warp,
)

CANON = ModelParameters(2, 2.5, 3.0, 0.5, 1.0)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def canon():
    return CANON


@pytest.fixture(scope="session")
def warps():
    return make_domain_warp(3.0), make_target_warp(0.5)


@pytest.fixture(scope="session")
def flat():
    return make_euclidean_warp()


@pytest.fixture(scope="session")
def canon_solution(warps):
    return integrate(CANON, *warps, SolverConfig(s_max=1e4))


@pytest.fixture(scope="session")
def canon_solution_1e5(warps):
    return integrate(CANON, *warps, SolverConfig(s_max=1e5))


@pytest.fixture(scope="session")
def flat_solution(flat):
    return integrate(CANON, flat, flat, SolverConfig(s_max=100.0), check_params=False)


@pytest.fixture(scope="session")
def harmonic_solution(warps):
    params = ModelParameters(2, 2.0, 3.0, 0.5, 1.0)
    return integrate(params, *warps, SolverConfig(s_max=1e4), check_params=False)


@pytest.fixture(scope="session")
def convexity_grid():
    return np.logspace(-6, 3, 400)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
