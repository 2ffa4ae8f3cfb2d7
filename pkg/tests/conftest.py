import pytest

from uavsem.channel import DelayModel
from uavsem.config import ScenarioConfig


@pytest.fixture
def corridor_cfg():
    """One device just off the straight start-goal line, no command delay."""
    return ScenarioConfig(
        device_positions=((300.0, 310.0),),
        start=(100.0, 300.0),
        goal=(500.0, 300.0),
        delay=DelayModel("zero"),
        v_max=10.0,
        horizon=120,
    )


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
