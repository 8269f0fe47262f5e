import pytest

from alphastab.lattice import FlowParams, make_orbit

# (p, q) pairs covering I0, I+ and I- orbits
TYPE_ONE_CASES = [
    ((3, 1), (-1, 2)),
    ((3, 1), (0, -2)),
    ((3, 1), (2, -2)),
    ((3, 1), (0, -3)),
    ((1, 2), (1, -1)),
    ((1, 2), (-1, 1)),
    ((2, 0), (0, 1)),
    ((4, 1), (-1, 2)),
]

TYPE_ZERO_CASES = [
    ((3, 1), (-2, 3)),
    ((3, 1), (0, 4)),
    ((2, 0), (0, 2)),
    ((1, 2), (3, 0)),
    ((4, 1), (-2, 5)),
]

ACCEPTANCE_LINES: list[str] = []


def orbit_of(p, q, alpha=0.0, gamma=1.0):
    return make_orbit(FlowParams(p, alpha, gamma), q)


@pytest.fixture(params=[0.0, 0.5, 1.0], ids=lambda a: f"alpha={a}")
def alpha(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
