"""Core quantities of the police/protester interaction model.

Everything here is pure: step-function hazards, the police presence rule and
the immutable value types (parameters, state, schedule, scenario, trajectory)
that the simulators pass around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

STATE_FIELDS = ("v1", "v2", "u1", "u2", "tau")

# Global sampling ranges; their midpoints also serve as case-study defaults.
SAMPLING_RANGES = {
    "T1": (0.001, 0.2),
    "T2": (0.0001, 0.01),
    "theta": (0.01, 0.08),
    "v_c": (0.0, 10.0),
    "tau_c": (0.0, 10.0),
}


class ValidationError(ValueError):
    """Raised when a model value violates its constraints.

    ``field`` names the offending attribute so callers (the scenario parser,
    the CLI) can report it.
    """

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _check_nonneg(name, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(name, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(name, "must be finite")
    if value < 0:
        raise ValidationError(name, f"must be >= 0, got {value!r}")


@dataclass(frozen=True)
class StepFn:
    """All-or-nothing response ``x -> intensity * 1[x >= threshold]``.

    With ``inclusive=False`` the comparison is strict.
    """

    threshold: float
    intensity: float
    inclusive: bool = True

    def __call__(self, x):
        return eval_step(self, x)


def eval_step(f: StepFn, x: float) -> float:
    active = x >= f.threshold if f.inclusive else x > f.threshold
    return f.intensity if active else 0.0


@dataclass(frozen=True)
class ModelParams:
    """Rates and thresholds of the hazard kernels.

    ``T3`` is the intensity of the moderate-to-agitator conversion step
    function; ``tau_f3`` its tension threshold.
    """

    T1: float
    T2: float
    T3: float
    tau_c: float
    v_c: float
    tau_f3: float
    theta: float
    omega: float
    epsilon: float
    f1_inclusive: bool = True
    f2_inclusive: bool = True
    f3_inclusive: bool = False

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name.endswith("_inclusive"):
                if not isinstance(value, bool):
                    raise ValidationError(f.name, f"expected a boolean, got {value!r}")
            else:
                _check_nonneg(f.name, value)

    @property
    def f1(self) -> StepFn:
        return StepFn(self.tau_c, self.T1, self.f1_inclusive)

    @property
    def f2(self) -> StepFn:
        return StepFn(self.v_c, self.T2, self.f2_inclusive)

    @property
    def f3(self) -> StepFn:
        return StepFn(self.tau_f3, self.T3, self.f3_inclusive)

    def with_values(self, **changes) -> ModelParams:
        return replace(self, **changes)


@dataclass(frozen=True)
class State:
    t: float = 0.0
    v1: float = 0.0
    v2: float = 0.0
    u1: float = 0.0
    u2: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            _check_nonneg(f.name, getattr(self, f.name))

    @property
    def protesters(self) -> float:
        return self.u1 + self.u2

    def as_array(self) -> np.ndarray:
        """The five dynamic components ``(v1, v2, u1, u2, tau)``."""
        return np.array([self.v1, self.v2, self.u1, self.u2, self.tau], dtype=np.float64)

    @classmethod
    def from_array(cls, y, t=0.0) -> State:
        return cls(float(t), *(float(x) for x in y))


@dataclass(frozen=True)
class PoliceSchedule:
    """``p0`` officers present from ``t_enter`` on, while the crowd exceeds
    ``min_protesters``."""

    p0: float
    t_enter: float = 0.0
    min_protesters: float = 1.0

    def __post_init__(self):
        _check_nonneg("p0", self.p0)
        _check_nonneg("t_enter", self.t_enter)
        if not isinstance(self.min_protesters, (int, float)) or not math.isfinite(self.min_protesters):
            raise ValidationError("min_protesters", "must be a finite number")


def police_presence(schedule: PoliceSchedule, t: float, state: State) -> float:
    if t >= schedule.t_enter and state.u1 + state.u2 > schedule.min_protesters:
        return float(schedule.p0)
    return 0.0


def hazards(state: State, p: float, params: ModelParams):
    """Per-capita event rates at ``state`` with ``p`` officers present.

    Returns
    -------
    (lambda_agitator, lambda_police, lambda_conversion)
        Rate at which one agitator commits an act of aggression, rate at
        which one officer does, and rate at which one moderate turns
        agitator.
    """
    lam_a = eval_step(params.f1, state.tau) / (p + 1.0)
    lam_p = eval_step(params.f2, state.v1)
    weight = state.v2 / (state.v2 + state.v1 + 1.0)
    lam_c = weight * eval_step(params.f3, state.tau)
    return lam_a, lam_p, lam_c


def prob_from_hazard(lam: float, dt: float) -> float:
    # expm1 keeps the small-rate regime accurate
    return -math.expm1(-lam * dt)


@dataclass(frozen=True)
class SolverSettings:
    dt: float = 0.1
    h: float = 0.01
    t_max: float = 2000.0
    record_every: int = 10

    def __post_init__(self):
        for name in ("dt", "h", "t_max"):
            value = getattr(self, name)
            _check_nonneg(name, value)
            if value == 0:
                raise ValidationError(name, "must be > 0")
        if isinstance(self.record_every, bool) or not isinstance(self.record_every, int) or self.record_every < 1:
            raise ValidationError("record_every", "must be a positive integer")


@dataclass(frozen=True)
class Scenario:
    initial: State
    params: ModelParams
    schedule: PoliceSchedule
    settings: SolverSettings = field(default_factory=SolverSettings)
    label: str = ""

    def __post_init__(self):
        if self.initial.t != 0:
            raise ValidationError("t", "initial state must start at t = 0")

    @property
    def n_protesters(self) -> float:
        return self.initial.u1 + self.initial.u2

    def with_params(self, **changes) -> Scenario:
        return replace(self, params=replace(self.params, **changes))

    def with_initial(self, **changes) -> Scenario:
        return replace(self, initial=replace(self.initial, **changes))

    def with_schedule(self, **changes) -> Scenario:
        return replace(self, schedule=replace(self.schedule, **changes))

    def with_settings(self, **changes) -> Scenario:
        return replace(self, settings=replace(self.settings, **changes))


DEPLETED = "protesters_depleted"
HORIZON = "horizon_reached"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded samples of one run.

    ``y`` has shape ``(n, 5)`` with columns ``v1, v2, u1, u2, tau``; ``p`` is
    the police presence evaluated at each sample.
    """

    t: np.ndarray
    y: np.ndarray
    p: np.ndarray
    terminated_by: str

    def __len__(self):
        return len(self.t)

    @property
    def samples(self) -> list[State]:
        return [State.from_array(row, t) for t, row in zip(self.t, self.y)]

    @property
    def final(self) -> State:
        return State.from_array(self.y[-1], self.t[-1])

    @property
    def initial(self) -> State:
        return State.from_array(self.y[0], self.t[0])

    def column(self, name) -> np.ndarray:
        return self.y[:, STATE_FIELDS.index(name)]

    @classmethod
    def empty(cls) -> Trajectory:
        return cls(np.zeros(0), np.zeros((0, 5)), np.zeros(0), HORIZON)


def range_midpoints() -> dict:
    return {name: (lo + hi) / 2.0 for name, (lo, hi) in SAMPLING_RANGES.items()}


# Case-study rates; the five analysed parameters sit at their range midpoints.
CASE_STUDY_PARAMS = ModelParams(
    T3=0.1,
    tau_f3=2.0,
    omega=0.01,
    epsilon=0.02,
    **range_midpoints(),
)
