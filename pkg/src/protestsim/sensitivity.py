"""Global (Monte Carlo envelope) and local (finite-difference) sensitivity
of the ODE trajectories to the rate and threshold parameters."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import runner
from ._kernels import pack_params
from .model import CASE_STUDY_PARAMS, STATE_FIELDS, SAMPLING_RANGES, ModelParams, Scenario

SWEPT = ("T1", "T2", "theta", "v_c", "tau_c")
STATS = ("min", "q05", "mean", "q95", "max", "sd")


@dataclass(frozen=True)
class ParamRanges:
    """Closed sampling interval per parameter; defaults to ``SAMPLING_RANGES``."""

    bounds: dict = field(default_factory=lambda: dict(SAMPLING_RANGES))

    def __post_init__(self):
        if not self.bounds:
            raise ValueError("no parameter ranges given")
        for name, (lo, hi) in self.bounds.items():
            if name not in SWEPT:
                raise ValueError(f"{name}: not a sampled parameter (choose from {', '.join(SWEPT)})")
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo < 0:
                raise ValueError(f"{name}: bounds must be finite and >= 0")
            if lo > hi:
                raise ValueError(f"{name}: empty range [{lo}, {hi}]")

    def names(self):
        # fixed draw order keeps seeds meaningful when bounds are given in any order
        return [n for n in SWEPT if n in self.bounds]

    def restrict(self, **bounds) -> ParamRanges:
        return ParamRanges({**self.bounds, **bounds})


def sample_params(ranges: ParamRanges, n: int, seed: int, base: ModelParams = CASE_STUDY_PARAMS):
    """``n`` independent uniform draws over ``ranges``, other fields from ``base``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    draws = {name: rng.uniform(*ranges.bounds[name], size=n) for name in ranges.names()}
    return [replace(base, **{k: float(v[i]) for k, v in draws.items()}) for i in range(n)]


@dataclass(frozen=True, eq=False)
class EnvelopeSummary:
    """Pointwise ensemble statistics.

    ``stats[name]`` has shape ``(len(t), 5)``, columns ordered as
    ``STATE_FIELDS``.
    """

    t: np.ndarray
    stats: dict
    n_draws: int
    seed: int
    finals: np.ndarray  # (n_draws, 5) end states, for ensemble-level summaries

    def band(self, output, stat):
        return self.stats[stat][:, STATE_FIELDS.index(output)]

    def width(self, output):
        return self.band(output, "max") - self.band(output, "min")


def _grid(scenario: Scenario, grid_step):
    h = scenario.settings.h
    every = int(round(grid_step / h))
    if every < 1 or abs(every * h - grid_step) > 1e-9 * max(grid_step, 1.0):
        raise ValueError(f"grid step {grid_step} must be a positive multiple of h={h}")
    _, n_steps = runner.scenario_steps(scenario, "ode")
    n_rec = n_steps // every + 1
    return every, n_steps, n_rec, (np.arange(n_rec) * every) * h


def _run_variants(base: Scenario, params_list, grid_step, workers, backend, labels):
    every, n_steps, n_rec, t = _grid(base, grid_step)
    y0, _ = runner.pack([base])
    y0 = np.repeat(y0, len(params_list), axis=0)
    par = np.array([pack_params(p, base.schedule) for p in params_list])
    res = runner.run_arrays("ode", y0, par, base.settings.h, n_steps, every, n_rec, workers=workers, backend=backend)
    runner.raise_on_failure(res, labels)
    return t, res


def global_envelopes(
    base: Scenario,
    ranges: ParamRanges | None = None,
    n: int = 200,
    seed: int = 0,
    grid_step: float = 1.0,
    workers: int = 1,
    backend=None,
) -> EnvelopeSummary:
    """Integrate ``n`` parameter draws and reduce them pointwise in time.

    Runs that end early are held at their final state so every draw covers
    the same time grid (spacing ``grid_step``, up to ``t_max``).
    """
    if n < 2:
        raise ValueError("need at least two draws")
    ranges = ranges or ParamRanges()
    draws = sample_params(ranges, n, seed, base.params)
    t, res = _run_variants(base, draws, grid_step, workers, backend, [f"draw {i}" for i in range(n)])
    rec = res.records  # (n, n_t, 5)

    lo = rec.min(axis=0)
    hi = rec.max(axis=0)
    # clip guards against the last-ulp drift of a mean over identical values
    mean = np.clip(rec.mean(axis=0), lo, hi)
    stats = {
        "min": lo,
        "q05": np.quantile(rec, 0.05, axis=0),
        "mean": mean,
        "q95": np.quantile(rec, 0.95, axis=0),
        "max": hi,
        "sd": rec.std(axis=0, ddof=1),
    }
    return EnvelopeSummary(t, stats, n, seed, res.final.copy())


@dataclass(frozen=True, eq=False)
class SensitivityMatrix:
    """Finite-difference sensitivity functions.

    ``values[i, j, k]`` estimates d(output j)/d(parameter k) at time ``t[i]``;
    ``scaled`` multiplies by parameter / output scale, where the output scale
    is the largest absolute value the base run reaches (1 if it stays 0).
    ``flagged[k]`` marks parameters whose perturbed runs switched a step
    function or police presence on a different step than the base run.
    """

    t: np.ndarray
    parameters: tuple
    values: np.ndarray
    scaled: np.ndarray
    flagged: np.ndarray
    rel_step: float
    base_values: dict
    base_trajectory: np.ndarray

    def column(self, output, parameter, scaled=False):
        data = self.scaled if scaled else self.values
        return data[:, STATE_FIELDS.index(output), self.parameters.index(parameter)]

    def l2_norms(self, scaled=True, outputs=STATE_FIELDS):
        data = self.scaled if scaled else self.values
        idx = [STATE_FIELDS.index(o) for o in outputs]
        norms = np.sqrt((data[:, idx, :] ** 2).sum(axis=(0, 1)) / len(self.t))
        return dict(zip(self.parameters, norms.tolist()))

    def ranking(self, scaled=True, outputs=STATE_FIELDS):
        norms = self.l2_norms(scaled, outputs)
        return sorted(norms, key=lambda k: -norms[k])


def local_sensitivity(
    base: Scenario,
    parameters=SWEPT,
    rel_step: float = 1e-4,
    grid_step: float = 1.0,
    workers: int = 1,
    backend=None,
) -> SensitivityMatrix:
    """Central differences with step ``rel_step * max(|value|, 1e-8)``.

    A parameter sitting at zero is differenced one-sidedly (values must stay
    nonnegative).
    """
    if not rel_step > 0:
        raise ValueError("rel_step must be > 0")
    parameters = tuple(parameters)
    variants = [base.params]
    spans = []
    for name in parameters:
        value = getattr(base.params, name)
        delta = rel_step * max(abs(value), 1e-8)
        lo = max(value - delta, 0.0)
        hi = value + delta
        variants += [replace(base.params, **{name: hi}), replace(base.params, **{name: lo})]
        spans.append(hi - lo)
    labels = ["base"] + [f"{name}{sign}" for name in parameters for sign in ("+", "-")]
    t, res = _run_variants(base, variants, grid_step, workers, backend, labels)

    rec = res.records
    plus, minus = rec[1::2], rec[2::2]  # (n_params, n_t, 5)
    values = np.transpose((plus - minus) / np.asarray(spans)[:, None, None], (1, 2, 0))

    scale = np.abs(rec[0]).max(axis=0)
    scale[scale == 0] = 1.0
    pvals = np.array([getattr(base.params, name) for name in parameters])
    scaled = values * pvals[None, None, :] / scale[None, :, None]

    sig = res.signature
    flagged = np.array(
        [not (np.array_equal(sig[1 + 2 * k], sig[0]) and np.array_equal(sig[2 + 2 * k], sig[0])) for k in range(len(parameters))]
    )
    return SensitivityMatrix(
        t=t,
        parameters=parameters,
        values=values,
        scaled=scaled,
        flagged=flagged,
        rel_step=rel_step,
        base_values=dict(zip(parameters, pvals.tolist())),
        base_trajectory=rec[0].copy(),
    )
