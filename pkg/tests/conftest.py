import pytest

from protestsim.model import ModelParams, PoliceSchedule, Scenario, SolverSettings, State

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def hot_params():
    """Active agitators at tension 5, dormant police and conversion."""
    return ModelParams(T1=0.1, T2=0.001, T3=0.1, tau_c=5.0, v_c=15.0, tau_f3=5.0, theta=0.2, omega=0.01, epsilon=0.01)


@pytest.fixture
def hot_state():
    return State(u1=100.0, u2=400.0, tau=5.0)


def make_scenario(initial, params, p0=100.0, t_enter=0.0, **settings):
    return Scenario(initial, params, PoliceSchedule(p0, t_enter), SolverSettings(**settings))


class _GridCache:
    def __init__(self):
        self._grids = {}

    def __getitem__(self, preset):
        if preset not in self._grids:
            from protestsim.sweep import preset_scenario, run_sweep_2d

            base, (axis1, axis2) = preset_scenario(preset)
            self._grids[preset] = run_sweep_2d(base, axis1, axis2)
        return self._grids[preset]


@pytest.fixture(scope="session")
def heatmaps():
    """Full default heat-map grids, computed on first use."""
    return _GridCache()
