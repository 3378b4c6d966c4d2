import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from tropkp.bundled import load_example
from tropkp.verification import random_alpha, random_curve

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def curve_from_seed(seed, **kw):
    return random_curve(np.random.default_rng(seed), **kw)


def curve_and_alpha(seed, **kw):
    rng = np.random.default_rng(seed)
    curve = random_curve(rng, **kw)
    from tropkp.graph_core import cycle_basis
    return curve, random_alpha(rng, cycle_basis(curve).rank)


@pytest.fixture(scope="session")
def single_loop():
    return load_example("single_loop")


@pytest.fixture(scope="session")
def two_loop():
    return load_example("two_loop")


@pytest.fixture(scope="session")
def theta_graph():
    return load_example("theta_graph")


@pytest.fixture(scope="session")
def elliptic_loop():
    return load_example("elliptic_loop")
