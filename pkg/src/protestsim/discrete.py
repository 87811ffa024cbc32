"""Discrete-time protest game.

Per step of length ``dt`` every agitator commits an act of aggression with
probability ``1 - exp(-f1(tau)/(p+1) dt)``, every officer with
``1 - exp(-f2(v1) dt)``, every moderate converts with
``1 - exp(-w f3(tau) dt)`` where ``w = v2/(v2+v1+1)``, and everybody leaves
at rate ``epsilon``. The state carries expected counts, so the update is
deterministic.
"""

from __future__ import annotations

from . import runner
from .model import (
    ModelParams,
    PoliceSchedule,
    Scenario,
    State,
    Trajectory,
    eval_step,
    police_presence,
    prob_from_hazard,
)
from .runner import StepSizeError

__all__ = ["step_discrete", "run_discrete", "classify_productive", "StepSizeError"]


def step_discrete(state: State, params: ModelParams, schedule: PoliceSchedule, dt: float) -> State:
    """Advance one step of the game.

    All right-hand sides use the pre-step state. Tension grows by
    ``theta`` per new act of aggression and decays by ``omega * tau * dt``.

    Raises
    ------
    StepSizeError
        If the fraction of agitators or moderates lost in one step would
        exceed 1.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    p = police_presence(schedule, state.t, state)
    f1 = eval_step(params.f1, state.tau)
    f2 = eval_step(params.f2, state.v1)
    f3 = eval_step(params.f3, state.tau)

    act = prob_from_hazard(f1 / (p + 1.0), dt)
    police = prob_from_hazard(f2, dt)
    convert = prob_from_hazard(state.v2 / (state.v2 + state.v1 + 1.0) * f3, dt)

    loss_agitators = act + params.epsilon * dt
    loss_moderates = convert + params.epsilon * dt
    if loss_agitators > 1.0 or loss_moderates > 1.0:
        raise StepSizeError(
            f"dt={dt} too large at t={state.t:g}: per-step loss fraction "
            f"{max(loss_agitators, loss_moderates):.4g} > 1"
        )

    dv1 = state.u1 * act
    dv2 = p * police
    u1 = state.u1 + state.u2 * convert - state.u1 * loss_agitators
    u2 = state.u2 - state.u2 * loss_moderates
    tau = state.tau + params.theta * (dv1 + dv2) - params.omega * state.tau * dt
    return State(
        t=state.t + dt,
        v1=state.v1 + dv1,
        v2=state.v2 + dv2,
        u1=max(u1, 0.0),
        u2=max(u2, 0.0),
        tau=max(tau, 0.0),
    )


def run_discrete(scenario: Scenario, backend=None) -> Trajectory:
    """Iterate the game from ``scenario.initial`` until fewer than one
    protester remains or ``t_max`` is reached."""
    return runner.trajectory(scenario, "discrete", backend=backend)


def classify_productive(trajectory: Trajectory) -> bool:
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    first, last = trajectory.y[0], trajectory.y[-1]
    return bool(last[0] == 0.0 and last[1] == 0.0 and last[4] < first[4])
