import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from protestsim.model import (
    CASE_STUDY_PARAMS,
    ModelParams,
    PoliceSchedule,
    Scenario,
    SolverSettings,
    State,
    StepFn,
    ValidationError,
    eval_step,
    hazards,
    police_presence,
    prob_from_hazard,
)

nonneg = st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False)
rate = st.floats(min_value=0.0, max_value=10.0, allow_nan=False)


def test_step_inclusive_at_threshold():
    assert eval_step(StepFn(5.0, 0.1), 5.0) == 0.1


def test_step_below_threshold():
    assert eval_step(StepFn(5.0, 0.1), 4.999) == 0.0


def test_step_strict_at_threshold():
    assert eval_step(StepFn(2.0, 0.1, inclusive=False), 2.0) == 0.0
    assert StepFn(2.0, 0.1, inclusive=False)(2.0 + 1e-12) == 0.1


def test_default_inclusivity():
    p = CASE_STUDY_PARAMS
    assert p.f1.inclusive and p.f2.inclusive and not p.f3.inclusive


def test_hazard_agitator_dormant():
    lam_a, _, _ = hazards(State(u1=10, tau=3.0), 0.0, CASE_STUDY_PARAMS.with_values(tau_c=5.0))
    assert lam_a == 0.0


def test_hazard_agitator_active():
    params = CASE_STUDY_PARAMS.with_values(T1=0.1, tau_c=5.0)
    lam_a, _, _ = hazards(State(tau=6.0), 99.0, params)
    assert lam_a == pytest.approx(0.001, rel=1e-15)


def test_hazard_conversion():
    params = CASE_STUDY_PARAMS.with_values(T3=0.1, tau_f3=2.0)
    _, _, lam_c = hazards(State(v1=0.0, v2=1.0, tau=3.0), 0.0, params)
    assert lam_c == pytest.approx(0.05, rel=1e-15)


def test_prob_zero_hazard():
    assert prob_from_hazard(0.0, 1.0) == 0.0


@pytest.mark.parametrize("lam, dt", [(0.1, 1.0), (0.1, 0.01), (1e-9, 0.5), (3.0, 2.0)])
def test_prob_matches_arbitrary_precision(lam, dt):
    mpmath.mp.dps = 40
    expected = float(1 - mpmath.exp(-mpmath.mpf(lam) * mpmath.mpf(dt)))
    assert prob_from_hazard(lam, dt) == pytest.approx(expected, rel=1e-15)


def test_prob_known_values():
    assert prob_from_hazard(0.1, 1.0) == pytest.approx(0.095162581964040427, rel=1e-15)
    assert prob_from_hazard(0.1, 0.01) == pytest.approx(0.00099950016662500833, rel=1e-15)
    assert prob_from_hazard(0.1, 0.01) == pytest.approx(0.1 * 0.01, rel=1e-3)


def test_police_before_entrance():
    sched = PoliceSchedule(100.0, t_enter=10.0)
    assert police_presence(sched, 5.0, State(u2=200.0)) == 0.0


def test_police_after_entrance():
    sched = PoliceSchedule(100.0, t_enter=10.0)
    assert police_presence(sched, 20.0, State(u1=50.0, u2=150.0)) == 100.0


def test_police_leave_depleted_crowd():
    sched = PoliceSchedule(100.0)
    assert police_presence(sched, 20.0, State(u1=0.25, u2=0.25)) == 0.0
    assert police_presence(sched, 20.0, State(u2=1.0)) == 0.0  # strict


@pytest.mark.parametrize("name", ["T1", "omega", "tau_c"])
def test_params_reject_negative(name):
    with pytest.raises(ValidationError) as err:
        CASE_STUDY_PARAMS.with_values(**{name: -1.0})
    assert err.value.field == name


def test_state_rejects_nan():
    with pytest.raises(ValidationError):
        State(u1=float("nan"))


def test_settings_and_scenario_validation():
    with pytest.raises(ValidationError):
        SolverSettings(h=0.0)
    with pytest.raises(ValidationError):
        SolverSettings(record_every=0)
    with pytest.raises(ValidationError):
        Scenario(State(t=1.0), CASE_STUDY_PARAMS, PoliceSchedule(1.0))


@given(thr=nonneg, inten=rate, inc=st.booleans(), x=nonneg, y=nonneg)
def test_step_monotone(thr, inten, inc, x, y):
    f = StepFn(thr, inten, inc)
    lo, hi = sorted((x, y))
    assert eval_step(f, lo) <= eval_step(f, hi)


states = st.builds(State, v1=nonneg, v2=nonneg, u1=nonneg, u2=nonneg, tau=nonneg)


@given(state=states, p=nonneg, T1=rate, T2=rate, T3=rate, thr=nonneg)
def test_hazards_finite_and_bounded(state, p, T1, T2, T3, thr):
    params = ModelParams(T1=T1, T2=T2, T3=T3, tau_c=thr, v_c=thr, tau_f3=thr, theta=0.1, omega=0.01, epsilon=0.01)
    lams = hazards(state, p, params)
    assert all(math.isfinite(x) and x >= 0 for x in lams)
    assert lams[2] <= T3


def test_hazards_all_zero_state():
    params = ModelParams(T1=1, T2=1, T3=1, tau_c=0, v_c=0, tau_f3=0, theta=0, omega=0, epsilon=0, f3_inclusive=True)
    assert hazards(State(), 0.0, params) == (1.0, 1.0, 0.0)


@given(lam=rate, lam2=rate, dt=st.floats(0, 100), dt2=st.floats(0, 100))
def test_prob_range_and_monotone(lam, lam2, dt, dt2):
    p = prob_from_hazard(lam, dt)
    assert 0.0 <= p < 1.0 or (p == 1.0 and lam * dt > 36)  # 1 - e^-x rounds to 1 in doubles
    assert prob_from_hazard(min(lam, lam2), dt) <= prob_from_hazard(max(lam, lam2), dt)
    assert prob_from_hazard(lam, min(dt, dt2)) <= prob_from_hazard(lam, max(dt, dt2))


@given(lam=st.floats(1e-6, 10.0))
def test_prob_first_order(lam):
    dt = 1e-6
    assert prob_from_hazard(lam, dt) / dt == pytest.approx(lam, rel=1e-4)
