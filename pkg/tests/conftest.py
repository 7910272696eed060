import functools
import sys

import numpy as np
import pytest

from plcurv.fixtures import load_fixture

FIXTURE_NAMES = ["tetrahedron", "icosahedron", "torus1v", "genus2"]


@functools.lru_cache(maxsize=None)
def _cached(name):
    return load_fixture(name)


def fixture_mesh(name):
    surface, lengths = _cached(name)
    return surface, lengths.copy()


@pytest.fixture(params=FIXTURE_NAMES)
def mesh(request):
    return fixture_mesh(request.param)


@pytest.fixture
def tetra():
    return fixture_mesh("tetrahedron")


@pytest.fixture
def genus2():
    return fixture_mesh("genus2")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
