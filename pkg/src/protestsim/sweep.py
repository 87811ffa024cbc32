"""Two-parameter sweeps, phase boundaries and the named experiment presets."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import runner
from ._kernels import n_steps_for
from .model import (
    CASE_STUDY_PARAMS,
    ModelParams,
    PoliceSchedule,
    Scenario,
    SolverSettings,
    State,
    ValidationError,
)

TARGETS = ("tau_c", "v_c", "initial_agitators", "entrance_time")

AXIS_LABELS = {
    "tau_c": "critical tension tau_c",
    "v_c": "police tolerance v_c",
    "initial_agitators": "initial agitators u1(0)",
    "entrance_time": "police entrance time",
}


@dataclass(frozen=True)
class AxisSpec:
    target: str
    values: tuple

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"unknown axis target {self.target!r}; expected one of {', '.join(TARGETS)}")
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError(f"{self.target}: axis has no values")
        arr = np.asarray(vals)
        if not np.all(np.isfinite(arr)) or arr.min() < 0:
            raise ValueError(f"{self.target}: axis values must be finite and >= 0")
        if np.any(np.diff(arr) <= 0):
            raise ValueError(f"{self.target}: axis values must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @classmethod
    def arange(cls, target, start, step, stop):
        """Inclusive grid ``start, start+step, ..., stop`` built from integer
        multiples of ``step`` (no accumulated drift)."""
        if step <= 0:
            raise ValueError("axis step must be > 0")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return cls(target, tuple(start + i * step for i in range(count)))

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class CellMetrics:
    total_police_aofa: float
    total_protester_aofa: float
    peak_agitators: float
    duration: float
    productive: bool


METRIC_COLUMNS = {
    "police": "police_aofa",
    "protester": "protester_aofa",
    "peak_agitators": "peak_agitators",
    "duration": "duration",
}


@dataclass(frozen=True, eq=False)
class SweepGrid:
    """Per-cell summaries; arrays are indexed ``[i_axis1, i_axis2]``."""

    axis1: AxisSpec
    axis2: AxisSpec
    police_aofa: np.ndarray
    protester_aofa: np.ndarray
    peak_agitators: np.ndarray
    duration: np.ndarray
    productive: np.ndarray

    @property
    def shape(self):
        return (len(self.axis1), len(self.axis2))

    def metric(self, name) -> np.ndarray:
        try:
            return getattr(self, METRIC_COLUMNS[name])
        except KeyError:
            raise ValueError(f"unknown metric {name!r}; expected one of {', '.join(METRIC_COLUMNS)}") from None

    def cell(self, i, j) -> CellMetrics:
        return CellMetrics(
            float(self.police_aofa[i, j]),
            float(self.protester_aofa[i, j]),
            float(self.peak_agitators[i, j]),
            float(self.duration[i, j]),
            bool(self.productive[i, j]),
        )

    @property
    def cells(self):
        return [[self.cell(i, j) for j in range(self.shape[1])] for i in range(self.shape[0])]

    def index(self, axis, value):
        values = np.asarray((self.axis1 if axis == 1 else self.axis2).values)
        hit = np.flatnonzero(np.isclose(values, value, rtol=0, atol=1e-9))
        if len(hit) == 0:
            raise KeyError(f"{value} is not on axis {axis}")
        return int(hit[0])

    def equals(self, other: SweepGrid) -> bool:
        """Bitwise equality of axes and every metric."""
        return (
            self.axis1 == other.axis1
            and self.axis2 == other.axis2
            and all(
                np.array_equal(getattr(self, col), getattr(other, col))
                for col in (*METRIC_COLUMNS.values(), "productive")
            )
        )


def _apply(scenario: Scenario, target, value) -> Scenario:
    if target == "tau_c":
        return scenario.with_params(tau_c=value)
    if target == "v_c":
        return scenario.with_params(v_c=value)
    if target == "entrance_time":
        return scenario.with_schedule(t_enter=value)
    n = scenario.n_protesters
    if value > n:
        raise ValidationError("initial_agitators", f"{value} exceeds the crowd size {n}")
    return scenario.with_initial(u1=value, u2=n - value)


def cell_scenarios(base: Scenario, axis1: AxisSpec, axis2: AxisSpec):
    """Row-major list of per-cell scenarios."""
    if axis1.target == axis2.target:
        raise ValueError("sweep axes must target different quantities")
    return [
        _apply(_apply(base, axis1.target, a), axis2.target, b)
        for a in axis1.values
        for b in axis2.values
    ]


def run_sweep_2d(base: Scenario, axis1: AxisSpec, axis2: AxisSpec, workers=1, backend=None, order=None) -> SweepGrid:
    """Integrate every cell of the ``axis1 x axis2`` grid with the ODE.

    ``order`` optionally permutes the execution order of the (row-major)
    cells; results are always stored by cell index.
    """
    scenarios = cell_scenarios(base, axis1, axis2)
    n = len(scenarios)
    perm = np.arange(n) if order is None else np.asarray(order)
    if sorted(perm.tolist()) != list(range(n)):
        raise ValueError("order must be a permutation of the cell indices")

    y0, par = runner.pack(scenarios)
    h = base.settings.h
    res = runner.run_arrays("ode", y0[perm], par[perm], h, n_steps_for(base.settings.t_max, h), workers=workers, backend=backend)
    labels = [
        f"cell ({axis1.target}={a:g}, {axis2.target}={b:g})"
        for a in axis1.values for b in axis2.values
    ]
    runner.raise_on_failure(res, [labels[k] for k in perm])

    final = np.empty_like(res.final)
    final[perm] = res.final
    peak = np.empty_like(res.peak_u1)
    peak[perm] = res.peak_u1
    duration = np.empty_like(res.duration)
    duration[perm] = res.duration

    shape = (len(axis1), len(axis2))
    tau0 = y0[:, 4]
    productive = (final[:, 0] == 0) & (final[:, 1] == 0) & (final[:, 4] < tau0)
    return SweepGrid(
        axis1,
        axis2,
        police_aofa=final[:, 1].reshape(shape),
        protester_aofa=final[:, 0].reshape(shape),
        peak_agitators=peak.reshape(shape),
        duration=duration.reshape(shape),
        productive=productive.reshape(shape),
    )


def detect_phase_boundary(grid: SweepGrid, metric="police", threshold=0.5):
    """Adjacent (4-neighbour) cell pairs on opposite sides of ``threshold``.

    Pairs are ``((i, j), (i2, j2))`` with the second cell one step further
    along axis 1 or axis 2.
    """
    above = grid.metric(metric) > threshold
    pairs = []
    n1, n2 = above.shape
    for i in range(n1):
        for j in range(n2):
            if i + 1 < n1 and above[i, j] != above[i + 1, j]:
                pairs.append(((i, j), (i + 1, j)))
            if j + 1 < n2 and above[i, j] != above[i, j + 1]:
                pairs.append(((i, j), (i, j + 1)))
    return pairs


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

CROWD = 500.0
POLICE = 100.0

HEATMAP_PARAMS = ModelParams(
    T1=0.1, T2=0.01, T3=0.1, tau_c=5.0, v_c=5.0, tau_f3=5.0, theta=0.2, omega=0.01, epsilon=0.01
)
ENTRANCE_PARAMS = replace(HEATMAP_PARAMS, T2=0.001, tau_c=5.0, v_c=15.0)


def heatmap_axes():
    return AxisSpec.arange("tau_c", 0.0, 0.25, 10.0), AxisSpec.arange("v_c", 0.0, 0.25, 15.0)


def entrance_axes():
    return AxisSpec.arange("initial_agitators", 0.0, 10.0, CROWD), AxisSpec.arange("entrance_time", 0.0, 1.0, 50.0)


def _case(label, initial, t_enter=0.0):
    return Scenario(initial, CASE_STUDY_PARAMS, PoliceSchedule(POLICE, t_enter), SolverSettings(), label)


def _heatmap(label, share):
    agitators = share * CROWD
    initial = State(u1=agitators, u2=CROWD - agitators, tau=5.0)
    return Scenario(initial, HEATMAP_PARAMS, PoliceSchedule(POLICE), SolverSettings(), label), heatmap_axes()


def _entrance(label, T1):
    initial = State(u1=100.0, u2=CROWD - 100.0, tau=5.0)
    params = replace(ENTRANCE_PARAMS, T1=T1)
    return Scenario(initial, params, PoliceSchedule(POLICE), SolverSettings(), label), entrance_axes()


PRESETS = {
    "cs1i": lambda: (_case("cs1i", State(u2=CROWD, tau=2.0)), None),
    "cs1ii": lambda: (_case("cs1ii", State(v2=1.0, u2=CROWD, tau=2.0)), None),
    "cs2i": lambda: (_case("cs2i", State(u1=100.0, u2=400.0, tau=2.0)), None),
    "cs2ii": lambda: (_case("cs2ii", State(u1=100.0, u2=400.0, tau=2.0), t_enter=10.0), None),
    "heatmap-A20": lambda: _heatmap("heatmap-A20", 0.2),
    "heatmap-A40": lambda: _heatmap("heatmap-A40", 0.4),
    "heatmap-A50": lambda: _heatmap("heatmap-A50", 0.5),
    "entrance-T1-0.1": lambda: _entrance("entrance-T1-0.1", 0.1),
    "entrance-T1-0.01": lambda: _entrance("entrance-T1-0.01", 0.01),
    "entrance-T1-0.5": lambda: _entrance("entrance-T1-0.5", 0.5),
}


def preset_scenario(name):
    """Scenario (and sweep axes, for heat-map presets) of a named experiment."""
    try:
        build = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}") from None
    return build()
