"""Batch execution of scenarios on the compiled kernels.

Scenarios are split into contiguous chunks, one per worker thread (the numba
kernels release the GIL). Results land in pre-sized arrays by index, so the
output never depends on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .model import DEPLETED, HORIZON, Scenario, Trajectory


class NumericalError(RuntimeError):
    """A run could not be completed (step too large, divergence)."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class StepSizeError(NumericalError):
    pass


class DivergenceError(NumericalError):
    pass


@dataclass
class BatchResult:
    final: np.ndarray
    peak_u1: np.ndarray
    stop_step: np.ndarray
    status: np.ndarray
    records: np.ndarray
    signature: np.ndarray
    step: float

    @property
    def duration(self):
        return self.stop_step * self.step


def pack(scenarios):
    y0 = np.array([s.initial.as_array() for s in scenarios], dtype=np.float64).reshape(-1, 5)
    par = np.array([K.pack_params(s.params, s.schedule) for s in scenarios], dtype=np.float64).reshape(-1, K.NPAR)
    return y0, par


def run_arrays(method, y0, par, step, n_steps, record_every=1, n_rec=0, workers=1, backend=None):
    """Run packed scenarios; ``method`` is ``"ode"`` or ``"discrete"``."""
    if method == "ode":
        kernel = K.ode_batch
    elif method == "discrete":
        kernel = K.discrete_batch
    else:
        raise ValueError(f"unknown method {method!r}")
    y0 = np.asarray(y0, dtype=np.float64)
    par = np.asarray(par, dtype=np.float64)
    n = len(y0)
    workers = max(1, min(int(workers), n)) if n else 1

    def call(lo, hi):
        return kernel(y0[lo:hi], par[lo:hi], step, n_steps, record_every, n_rec, backend=backend)

    if workers == 1:
        parts = [call(0, n)]
    else:
        edges = np.linspace(0, n, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(call, edges[:-1], edges[1:]))
    merged = [np.concatenate([part[j] for part in parts]) for j in range(6)]
    return BatchResult(*merged, step=float(step))


def raise_on_failure(result: BatchResult, labels=None):
    bad = np.flatnonzero((result.status == K.STEP_SIZE) | (result.status == K.NONFINITE))
    if len(bad) == 0:
        return
    i = int(bad[0])
    where = labels[i] if labels is not None else f"run {i}"
    t = result.stop_step[i] * result.step
    if result.status[i] == K.STEP_SIZE:
        raise StepSizeError(
            f"{where}: step {result.step} too large at t={t:g} (per-step loss fraction exceeds 1)", index=i
        )
    raise DivergenceError(f"{where}: non-finite state at t={t:g}", index=i)


def scenario_steps(scenario: Scenario, method):
    step = scenario.settings.h if method == "ode" else scenario.settings.dt
    return step, K.n_steps_for(scenario.settings.t_max, step)


def trajectory(scenario: Scenario, method, backend=None) -> Trajectory:
    """Single recorded run, sampled every ``record_every`` steps plus the end."""
    step, n_steps = scenario_steps(scenario, method)
    every = scenario.settings.record_every
    y0, par = pack([scenario])
    res = run_arrays(method, y0, par, step, n_steps, every, n_steps // every + 1, backend=backend)
    raise_on_failure(res, [scenario.label or "scenario"])

    k_stop = int(res.stop_step[0])
    n_slots = k_stop // every + 1
    t = (np.arange(n_slots) * every) * step
    y = res.records[0, :n_slots]
    if k_stop % every:
        t = np.append(t, k_stop * step)
        y = np.vstack([y, res.final[:1]])
    reason = DEPLETED if res.status[0] == K.DEPLETED else HORIZON
    return Trajectory(t, y, presence_along(scenario, t, y), reason)


def presence_along(scenario: Scenario, t, y):
    s = scenario.schedule
    on = (np.asarray(t) >= s.t_enter) & (y[:, 2] + y[:, 3] > s.min_protesters)
    return np.where(on, float(s.p0), 0.0)
