"""Deterministic simulator of police/protester interaction dynamics."""

from .discrete import classify_productive, run_discrete, step_discrete
from .model import (
    CASE_STUDY_PARAMS,
    ModelParams,
    PoliceSchedule,
    Scenario,
    SolverSettings,
    State,
    StepFn,
    Trajectory,
    ValidationError,
    eval_step,
    hazards,
    police_presence,
    prob_from_hazard,
)
from .ode import AggressionForecast, analytic_upper_bounds, integrate, predict_zero_aggression, rhs
from .runner import DivergenceError, NumericalError, StepSizeError
from .sensitivity import ParamRanges, global_envelopes, local_sensitivity, sample_params
from .sweep import AxisSpec, SweepGrid, detect_phase_boundary, preset_scenario, run_sweep_2d

__version__ = "0.1.0"
