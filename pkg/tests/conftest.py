import pytest

from warplab.geometry import WarpedManifold
from warplab.profile import builtin_profile, builtin_suite

T_MAX = 1536.0


@pytest.fixture(scope="session")
def suite():
    return {p.label: WarpedManifold(p) for p in builtin_suite(T_MAX)}


@pytest.fixture(scope="session")
def euclid():
    return WarpedManifold(builtin_profile("euclidean", t_max=T_MAX))


@pytest.fixture(scope="session")
def cone():
    return WarpedManifold(builtin_profile("cone_tanh", [0.5], t_max=T_MAX))


@pytest.fixture(scope="session")
def cylinder():
    return WarpedManifold(builtin_profile("cylinderizing", t_max=T_MAX))


@pytest.fixture(scope="session")
def parab():
    return WarpedManifold(builtin_profile("paraboloidal", t_max=T_MAX))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
