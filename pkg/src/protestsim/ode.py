"""Continuum limit of the protest game.

    dv1/dt  = u1 f1(tau)/(p+1)
    dv2/dt  = p f2(v1)
    du1/dt  = u2 w f3(tau) - u1 (f1(tau)/(p+1) + eps)
    du2/dt  = -u2 (w f3(tau) + eps)
    dtau/dt = theta [u1 f1(tau)/(p+1) + p f2(v1)] - omega tau

with ``w = v2/(v2+v1+1)``. Integrated with classical RK4 at a fixed step;
police presence is frozen over each step and the state is clamped at zero
after it.
"""

from __future__ import annotations

import enum

import numpy as np

from . import runner
from .model import ModelParams, Scenario, State, Trajectory, eval_step, hazards
from .runner import DivergenceError

__all__ = [
    "rhs",
    "integrate",
    "analytic_upper_bounds",
    "predict_zero_aggression",
    "AggressionForecast",
    "DivergenceError",
]


def rhs(state: State, p: float, params: ModelParams) -> np.ndarray:
    """Time derivative ``(dv1, dv2, du1, du2, dtau)`` at ``state``."""
    lam_a, lam_p, lam_c = hazards(state, p, params)
    dv1 = state.u1 * lam_a
    dv2 = p * lam_p
    du1 = state.u2 * lam_c - state.u1 * (lam_a + params.epsilon)
    du2 = -state.u2 * (lam_c + params.epsilon)
    dtau = params.theta * (dv1 + dv2) - params.omega * state.tau
    return np.array([dv1, dv2, du1, du2, dtau])


def integrate(scenario: Scenario, backend=None) -> Trajectory:
    return runner.trajectory(scenario, "ode", backend=backend)


def analytic_upper_bounds(t, initial: State, params: ModelParams):
    """Exponential upper bounds on the agitator and moderate counts.

    ``u2 <= u2(0) e^{-eps t}`` follows from ``du2/dt <= -eps u2``; feeding
    that into ``du1/dt <= T3 u2 - eps u1`` gives
    ``u1 <= e^{-eps t} (u1(0) + T3 u2(0) t)``.
    Works elementwise on array ``t``.
    """
    t = np.asarray(t, dtype=np.float64)
    decay = np.exp(-params.epsilon * t)
    u2_bound = initial.u2 * decay
    u1_bound = decay * (initial.u1 + params.T3 * initial.u2 * t)
    if u1_bound.ndim == 0:
        return float(u1_bound), float(u2_bound)
    return u1_bound, u2_bound


class AggressionForecast(str, enum.Enum):
    ZERO = "zero_guaranteed"
    POSITIVE = "positive_guaranteed"
    INDETERMINATE = "indeterminate"


def predict_zero_aggression(scenario: Scenario) -> AggressionForecast:
    """Decide from the initial data alone whether aggression can occur.

    Zero is guaranteed when nobody starts aggressive, police cannot act at
    ``v1 = 0``, and either agitators are dormant at the initial tension (and
    tension can only decay) or there are no agitators and no police acts
    to convert moderates. Positive protester aggression is guaranteed when
    agitators are present and active from the start.
    """
    x, prm = scenario.initial, scenario.params
    quiet = x.v1 == 0 and x.v2 == 0 and prm.v_c > 0
    dormant = eval_step(prm.f1, x.tau) == 0.0
    if quiet and (dormant or x.u1 == 0):
        return AggressionForecast.ZERO
    if not dormant and x.u1 > 0:
        return AggressionForecast.POSITIVE
    return AggressionForecast.INDETERMINATE
