import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from impflow.examples import build_annulus, build_doubling_suspension, build_rotation

settings.register_profile(
    "impflow", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("impflow")


@pytest.fixture(scope="session")
def annulus():
    return build_annulus()


@pytest.fixture(scope="session")
def rotation():
    return build_rotation()


@pytest.fixture(scope="session")
def suspension():
    return build_doubling_suspension()


def polar(r, theta):
    return np.array([r * math.cos(theta), r * math.sin(theta)])


def annulus_oracle(r, theta, t):
    """Closed-form impulsive annulus orbit: rotate, and on reaching angle 2 pi
    jump to radius (1 + r) / 2 at angle pi.  Returns (point, impulse times)."""
    theta = theta % (2 * math.pi)
    first = 2 * math.pi - theta if theta > 0 else 2 * math.pi
    times = []
    s = first
    while s <= t + 1e-12:
        times.append(s)
        r = (1 + r) / 2
        s += math.pi
    if not times:
        return polar(r, theta + t), times
    return polar(r, math.pi + (t - times[-1])), times


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_lines(request):
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
