import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from spatial_uct.graph import SpatialNetwork, build_cost_table

settings.register_profile(
    "default",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture
def square():
    """Unit-square corners joined in a 4-cycle."""
    pos = [(0, 0), (1, 0), (1, 1), (0, 1)]
    return SpatialNetwork(pos, [(0, 1), (1, 2), (2, 3), (0, 3)])


@pytest.fixture
def path4():
    pos = [(0, 0.5), (0.3, 0.5), (0.6, 0.5), (0.9, 0.5)]
    return SpatialNetwork(pos, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def star4():
    """Hub 0 with leaves 1..4."""
    pos = [(0.5, 0.5), (0.5, 0.9), (0.9, 0.5), (0.5, 0.1), (0.1, 0.5)]
    return SpatialNetwork(pos, [(0, 1), (0, 2), (0, 3), (0, 4)])


@pytest.fixture
def six_nodes():
    """Two triangles joined by one bridge; positions tie-free."""
    pos = [(0.05, 0.1), (0.2, 0.35), (0.1, 0.6), (0.7, 0.15), (0.95, 0.4), (0.8, 0.7)]
    edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (1, 3)]
    return SpatialNetwork(pos, edges)


@pytest.fixture
def six_table(six_nodes):
    return build_cost_table(six_nodes, 2.0)


def kh_small(seed: int, n: int = 10):
    from spatial_uct.generators import KhParams, generate_kh

    return generate_kh(KhParams(n), np.random.default_rng(seed))
