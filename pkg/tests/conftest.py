from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from twoplectic.expr import SampleConfig
from twoplectic.lie2 import string_battery, volume_battery
from twoplectic.plectic import make_volume_plectic
from twoplectic.strings import build_phase_space

# reproducible runs: same examples every time, no wall-clock deadline
settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def sampler():
    return SampleConfig(points=20, tol=1e-9, seed=0)


@pytest.fixture(scope="session")
def volume():
    return make_volume_plectic(3)


@pytest.fixture(scope="session")
def volume_chains(volume):
    return volume_battery(volume)


@pytest.fixture(scope="session")
def string2():
    return build_phase_space(2)


@pytest.fixture(scope="session")
def string3():
    return build_phase_space(3)


@pytest.fixture(scope="session")
def string3_chains(string3, sampler):
    return string_battery(string3, sampler)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance")
        for line in sorted(acceptance_log.LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
