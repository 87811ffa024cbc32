"""Scenario documents, CSV tables and SVG heat maps.

Scenario documents are JSON objects with ``initial``, ``params``,
``schedule`` and (optional) ``settings`` sections plus an optional
``label``. Every model parameter must be spelled out; only solver settings
and ``min_protesters`` have defaults.

Floats are always written with ``repr``, the shortest decimal string that
reads back to the same double, so every writer round-trips exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, fields

import numpy as np

from .model import (
    STATE_FIELDS,
    ModelParams,
    PoliceSchedule,
    Scenario,
    SolverSettings,
    State,
    Trajectory,
    ValidationError,
)
from .sensitivity import STATS, EnvelopeSummary, SensitivityMatrix
from .sweep import AXIS_LABELS, SweepGrid


class ScenarioSyntaxError(ValueError):
    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_SECTIONS = {
    "initial": (State, STATE_FIELDS, ()),
    "params": (ModelParams, tuple(f.name for f in fields(ModelParams)), ()),
    "schedule": (PoliceSchedule, ("p0", "t_enter", "min_protesters"), ("min_protesters",)),
    "settings": (SolverSettings, ("dt", "h", "t_max", "record_every"), ("dt", "h", "t_max", "record_every")),
}


def _coerce(section, key, value):
    if key.endswith("_inclusive"):
        if not isinstance(value, bool):
            raise ValidationError(key, f"expected true or false, got {value!r}")
        return value
    if key == "record_every":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(key, f"expected an integer, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(key, f"expected a number, got {value!r}")
    return float(value)


def _section(doc, name):
    cls, keys, optional = _SECTIONS[name]
    raw = doc.get(name, {} if name == "settings" else None)
    if raw is None:
        raise ValidationError(name, "missing section")
    if not isinstance(raw, dict):
        raise ValidationError(name, "expected an object")
    unknown = sorted(set(raw) - set(keys))
    if unknown:
        raise ValidationError(unknown[0], f"unknown key in '{name}'")
    missing = [k for k in keys if k not in raw and k not in optional]
    if missing:
        raise ValidationError(missing[0], f"required in '{name}'")
    return cls(**{k: _coerce(name, k, v) for k, v in raw.items()})


def parse_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ScenarioSyntaxError("top level must be an object", 1, 1)
    unknown = sorted(set(doc) - {"label", *_SECTIONS})
    if unknown:
        raise ValidationError(unknown[0], "unknown top-level key")
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise ValidationError("label", "expected a string")
    return Scenario(
        initial=_section(doc, "initial"),
        params=_section(doc, "params"),
        schedule=_section(doc, "schedule"),
        settings=_section(doc, "settings"),
        label=label,
    )


def serialize_scenario(scenario: Scenario) -> str:
    initial = asdict(scenario.initial)
    initial.pop("t")
    doc = {
        "label": scenario.label,
        "initial": initial,
        "params": asdict(scenario.params),
        "schedule": asdict(scenario.schedule),
        "settings": asdict(scenario.settings),
    }
    return json.dumps(doc, indent=2) + "\n"


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _num(x):
    return repr(float(x))


def _csv(header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


TRAJECTORY_HEADER = ("t", "v1", "v2", "u1", "u2", "tau", "p")
GRID_HEADER = ("axis1", "axis2", "police_aofa", "protester_aofa", "peak_agitators", "duration", "productive")


def write_trajectory_csv(trajectory: Trajectory) -> str:
    rows = (
        [_num(t), *map(_num, y), _num(p)]
        for t, y, p in zip(trajectory.t, trajectory.y, trajectory.p)
    )
    return _csv(TRAJECTORY_HEADER, rows)


def read_trajectory_csv(text: str):
    """Parse a trajectory table back into ``(t, y, p)`` arrays."""
    lines = text.strip("\n").split("\n")
    if tuple(lines[0].split(",")) != TRAJECTORY_HEADER:
        raise ValueError("not a trajectory table")
    data = np.array([[float(x) for x in line.split(",")] for line in lines[1:]]).reshape(-1, 7)
    return data[:, 0], data[:, 1:6], data[:, 6]


def write_grid_csv(grid: SweepGrid) -> str:
    rows = []
    for i, a in enumerate(grid.axis1.values):
        for j, b in enumerate(grid.axis2.values):
            c = grid.cell(i, j)
            rows.append(
                [
                    _num(a),
                    _num(b),
                    _num(c.total_police_aofa),
                    _num(c.total_protester_aofa),
                    _num(c.peak_agitators),
                    _num(c.duration),
                    "true" if c.productive else "false",
                ]
            )
    return _csv(GRID_HEADER, rows)


def write_envelope_csv(summary: EnvelopeSummary) -> str:
    rows = []
    for i, t in enumerate(summary.t):
        for j, out in enumerate(STATE_FIELDS):
            rows.append([_num(t), out, *(_num(summary.stats[s][i, j]) for s in STATS)])
    return _csv(("t", "output", *STATS), rows)


def write_sensitivity_csv(matrix: SensitivityMatrix) -> str:
    rows = []
    for i, t in enumerate(matrix.t):
        for j, out in enumerate(STATE_FIELDS):
            for k, name in enumerate(matrix.parameters):
                rows.append(
                    [
                        _num(t),
                        out,
                        name,
                        _num(matrix.values[i, j, k]),
                        _num(matrix.scaled[i, j, k]),
                        "true" if matrix.flagged[k] else "false",
                    ]
                )
    return _csv(("t", "output", "parameter", "sensitivity", "scaled", "flagged"), rows)


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

HUE, SATURATION = 220, 70
LIGHT_MIN, LIGHT_MAX = 22.0, 96.0  # darkest, lightest
CELL = 10
MARGIN_LEFT, MARGIN_TOP, MARGIN_BOTTOM = 70, 40, 60
LEGEND_W = 90


def lightness(value, lo, hi):
    """Fill lightness (percent): ``lo`` maps to the lightest shade, ``hi``
    to the darkest."""
    if hi <= lo:
        return LIGHT_MAX
    frac = (value - lo) / (hi - lo)
    return LIGHT_MAX - frac * (LIGHT_MAX - LIGHT_MIN)


def _fill(light):
    return f"hsl({HUE},{SATURATION}%,{light:.6f}%)"


def _tick_indices(n, max_ticks=6):
    step = max(1, int(np.ceil((n - 1) / (max_ticks - 1)))) if n > 1 else 1
    return list(range(0, n, step))


def render_heatmap_svg(grid: SweepGrid, metric="police") -> str:
    """Heat map of one cell metric; axis 1 runs left to right, axis 2 bottom
    to top."""
    values = grid.metric(metric)
    n1, n2 = values.shape
    lo, hi = float(values.min()), float(values.max())
    width = MARGIN_LEFT + n1 * CELL + LEGEND_W
    height = MARGIN_TOP + n2 * CELL + MARGIN_BOTTOM
    plot_bottom = MARGIN_TOP + n2 * CELL
    title = {"police": "acts of aggression by police", "protester": "acts of aggression by protesters"}.get(metric, metric)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">',
        f'<text x="{MARGIN_LEFT}" y="20" font-size="12">{title}</text>',
        '<g class="cells">',
    ]
    for i in range(n1):
        for j in range(n2):
            x = MARGIN_LEFT + i * CELL
            y = plot_bottom - (j + 1) * CELL
            v = float(values[i, j])
            out.append(
                f'<rect class="cell" x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                f'fill="{_fill(lightness(v, lo, hi))}" data-value="{_num(v)}"/>'
            )
    out.append("</g>")

    for i in _tick_indices(n1):
        x = MARGIN_LEFT + i * CELL + CELL / 2
        out.append(f'<text x="{x}" y="{plot_bottom + 14}" text-anchor="middle">{grid.axis1.values[i]:g}</text>')
    for j in _tick_indices(n2):
        y = plot_bottom - j * CELL - CELL / 2 + 3
        out.append(f'<text x="{MARGIN_LEFT - 6}" y="{y}" text-anchor="end">{grid.axis2.values[j]:g}</text>')
    out.append(
        f'<text class="axis-label" x="{MARGIN_LEFT + n1 * CELL / 2}" y="{plot_bottom + 34}" '
        f'text-anchor="middle">{AXIS_LABELS[grid.axis1.target]}</text>'
    )
    ymid = MARGIN_TOP + n2 * CELL / 2
    out.append(
        f'<text class="axis-label" x="16" y="{ymid}" text-anchor="middle" '
        f'transform="rotate(-90 16 {ymid})">{AXIS_LABELS[grid.axis2.target]}</text>'
    )

    # colour bar
    bar_x = MARGIN_LEFT + n1 * CELL + 20
    bar_h = n2 * CELL
    steps = 20
    out.append('<g class="legend">')
    for k in range(steps):
        frac = k / (steps - 1)
        y = plot_bottom - (k + 1) * bar_h / steps
        out.append(
            f'<rect x="{bar_x}" y="{y:.3f}" width="14" height="{bar_h / steps:.3f}" '
            f'fill="{_fill(LIGHT_MAX - frac * (LIGHT_MAX - LIGHT_MIN))}"/>'
        )
    out.append(f'<text x="{bar_x + 18}" y="{plot_bottom}">{lo:.4g}</text>')
    out.append(f'<text x="{bar_x + 18}" y="{MARGIN_TOP + 8}">{hi:.4g}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
