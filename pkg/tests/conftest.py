import random

import pytest

from sivor import dummy_frame, named_gauge, preset_mixtures, train

GAUGE_NAMES = ("square", "triangle", "pentagon")

# lines printed by the acceptance tests, echoed again in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_points(rng, n, spread=1.0):
    return [(rng.uniform(-spread, spread), rng.uniform(-spread, spread)) for _ in range(n)]


@pytest.fixture(scope="session", params=GAUGE_NAMES)
def gauge_and_frame(request):
    g = named_gauge(request.param)
    return g, dummy_frame(g)


@pytest.fixture(scope="session")
def small_model():
    mx = preset_mixtures("clustered", 16, 2, seed=4)
    return mx, train(mx, 16, 2, 0.5, named_gauge("pentagon"), seed=4)


@pytest.fixture
def rng():
    return random.Random(12345)
