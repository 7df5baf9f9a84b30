import pytest
from hypothesis import settings

from omk.model import SystemParams

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def record(request):
    """Log one PASS/FAIL line for the acceptance summary."""
    lines = request.config.stash[ACCEPTANCE]

    def _record(order, label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {order:2d}. {label}: {detail}"
        lines.append((order, line))
        print(line)
        return ok

    return _record


@pytest.fixture(scope="session")
def red_sideband():
    return SystemParams.at_resonance(-50.0, 50.0, single_photon_coupling=1.0, mech_damping=1e-4)


@pytest.fixture(scope="session")
def deep_red():
    return SystemParams.at_resonance(-90.0, 50.0, single_photon_coupling=1.0, mech_damping=1e-4)


@pytest.fixture(scope="session")
def hot_blue_edge():
    return SystemParams.at_resonance(-32.5, 50.0, single_photon_coupling=1.0, mech_damping=1e-3,
                                     mech_bath_occupancy=650.0)
