import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from protestsim.model import CASE_STUDY_PARAMS, DEPLETED, HORIZON, ModelParams, State
from protestsim.ode import AggressionForecast, analytic_upper_bounds, integrate, predict_zero_aggression, rhs
from protestsim.sensitivity import ParamRanges, global_envelopes
from protestsim.sweep import preset_scenario

from conftest import make_scenario

REL = 1e-12


def test_rhs_zero_state():
    assert rhs(State(), 0.0, CASE_STUDY_PARAMS).tolist() == [0.0] * 5


def test_rhs_active_agitators(hot_params, hot_state):
    d = rhs(hot_state, 100.0, hot_params)
    assert d[0] == pytest.approx(0.099009900990099010, rel=REL)
    assert d[1] == 0.0
    assert d[2] == pytest.approx(-1.0990099009900990, rel=REL)
    assert d[3] == pytest.approx(-4.0, rel=REL)
    assert d[4] == pytest.approx(-0.030198019801980198, rel=REL)


def test_rhs_police_rate(hot_params):
    d = rhs(State(v1=20.0), 100.0, hot_params)
    assert d[1] == pytest.approx(0.1, rel=REL)


def test_inert_decay_matches_exponential():
    params = CASE_STUDY_PARAMS.with_values(v_c=5.0)
    scenario = make_scenario(State(u2=500.0, tau=2.0), params, h=0.01, record_every=100)
    traj = integrate(scenario)
    exact = 500.0 * np.exp(-params.epsilon * traj.t)
    np.testing.assert_allclose(traj.column("u2"), exact, rtol=1e-6)
    assert traj.terminated_by == DEPLETED


@pytest.mark.parametrize("preset", ["cs1i", "cs2i", "cs2ii", "heatmap-A50"])
def test_termination_contract(preset):
    scenario, _ = preset_scenario(preset)
    traj = integrate(scenario)
    final = traj.final
    assert final.u1 + final.u2 < 1 or traj.t[-1] == pytest.approx(scenario.settings.t_max)
    short = integrate(scenario.with_settings(t_max=3.0))
    assert short.terminated_by == HORIZON and short.t[-1] == pytest.approx(3.0)


def test_cs2i_agitators_decrease_on_average():
    scenario, _ = preset_scenario("cs2i")
    summary = global_envelopes(scenario, ParamRanges(), n=100, seed=3)
    mean_u1 = summary.band("u1", "mean")
    assert mean_u1[-1] < mean_u1[0]
    # decreasing on average over the run, sampled every 10 time units
    assert np.all(np.diff(mean_u1[::10][:30]) < 0)


def test_bounds_at_zero():
    initial = State(u1=7.0, u2=11.0)
    assert analytic_upper_bounds(0.0, initial, CASE_STUDY_PARAMS) == (7.0, 11.0)


def test_bound_values():
    params = CASE_STUDY_PARAMS.with_values(epsilon=0.02, T3=0.1)
    _, u2b = analytic_upper_bounds(100.0, State(u2=500.0), params)
    u1b, _ = analytic_upper_bounds(10.0, State(u2=500.0), params)
    assert u2b == pytest.approx(67.667641618306346, rel=REL)
    assert u1b == pytest.approx(409.36537653899093, rel=REL)


def test_bounds_vectorised():
    t = np.array([0.0, 10.0, 100.0])
    u1b, u2b = analytic_upper_bounds(t, State(u2=500.0), CASE_STUDY_PARAMS)
    assert u1b.shape == u2b.shape == (3,)


def test_predict_zero():
    scenario = make_scenario(State(u1=10.0, u2=10.0, tau=2.0), CASE_STUDY_PARAMS.with_values(tau_c=5.0, v_c=3.0))
    assert predict_zero_aggression(scenario) is AggressionForecast.ZERO


def test_predict_positive():
    scenario = make_scenario(State(u1=10.0, u2=10.0, tau=6.0), CASE_STUDY_PARAMS.with_values(tau_c=5.0))
    assert predict_zero_aggression(scenario) is AggressionForecast.POSITIVE


def test_predict_indeterminate():
    scenario = make_scenario(State(v2=1.0, u1=10.0, u2=10.0, tau=2.0), CASE_STUDY_PARAMS.with_values(tau_c=5.0))
    assert predict_zero_aggression(scenario) is AggressionForecast.INDETERMINATE


def test_backends_agree():
    for preset in ("cs2i", "cs2ii", "heatmap-A40"):
        scenario, _ = preset_scenario(preset)
        scenario = scenario.with_settings(t_max=150.0)
        a = integrate(scenario, backend="numba")
        b = integrate(scenario, backend="numpy")
        assert a.terminated_by == b.terminated_by
        np.testing.assert_allclose(a.y, b.y, rtol=1e-12, atol=1e-12)


def test_fixed_point():
    params = CASE_STUDY_PARAMS.with_values(tau_c=0.0, v_c=0.0)
    assert np.all(rhs(State(), 0.0, params) == 0.0)
    traj = integrate(make_scenario(State(), params, t_max=50.0))
    assert np.all(traj.y == 0.0)


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

param_draws = st.builds(
    ModelParams,
    T1=st.floats(0.001, 0.2),
    T2=st.floats(0.0001, 0.01),
    T3=st.floats(0.0, 0.2),
    tau_c=st.floats(0.0, 10.0),
    v_c=st.floats(0.0, 10.0),
    tau_f3=st.floats(0.0, 6.0),
    theta=st.floats(0.01, 0.08),
    omega=st.floats(0.0, 0.05),
    epsilon=st.floats(0.005, 0.05),
)
initials = st.builds(
    State,
    v1=st.floats(0, 20),
    v2=st.floats(0, 20),
    u1=st.floats(0, 300),
    u2=st.floats(0, 300),
    tau=st.floats(0, 10),
)


@settings(max_examples=40, deadline=None)
@given(initial=initials, params=param_draws)
def test_bounds_hold_along_trajectory(initial, params):
    traj = integrate(make_scenario(initial, params, t_max=200.0, record_every=5))
    u1b, u2b = analytic_upper_bounds(traj.t, initial, params)
    assert np.all(traj.column("u2") <= u2b * (1 + 1e-9))
    assert np.all(traj.column("u1") <= u1b * (1 + 1e-9))
    assert np.all(traj.column("tau") >= 0)


@settings(max_examples=40, deadline=None)
@given(initial=initials, params=param_draws)
def test_zero_forecast_is_exact(initial, params):
    initial = State(u1=initial.u1, u2=initial.u2, tau=initial.tau)
    scenario = make_scenario(initial, params.with_values(v_c=max(params.v_c, 1e-3)), t_max=300.0)
    if predict_zero_aggression(scenario) is not AggressionForecast.ZERO:
        return
    traj = integrate(scenario)
    assert np.all(traj.column("v1") == 0.0) and np.all(traj.column("v2") == 0.0)
