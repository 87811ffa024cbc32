"""Command-line entry point: ``protestsim <command> ...``.

Exit status is 0 on success, 1 for unreadable or invalid input and 2 when a
run fails numerically.
"""

from __future__ import annotations

import argparse
import sys

from . import io
from .discrete import run_discrete
from .model import ValidationError
from .ode import integrate
from .runner import NumericalError
from .sensitivity import SWEPT, ParamRanges, global_envelopes, local_sensitivity
from .sweep import PRESETS, TARGETS, AxisSpec, preset_scenario, run_sweep_2d

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, not numerical ones
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _load(path):
    try:
        return io.load_scenario(path)
    except OSError as exc:
        raise InputError(f"cannot read scenario {path}: {exc.strerror}") from None


def _axis(spec):
    try:
        target, start, step, stop = spec.split(":")
        return AxisSpec.arange(target, float(start), float(step), float(stop))
    except ValueError as exc:
        raise InputError(f"bad axis {spec!r} (expected target:start:step:stop, target in {', '.join(TARGETS)}): {exc}") from None


def _run(scenario, method, backend):
    return run_discrete(scenario, backend) if method == "discrete" else integrate(scenario, backend)


def cmd_simulate(args):
    scenario = _load(args.scenario)
    if args.dt is not None:
        scenario = scenario.with_settings(dt=args.dt)
    if args.h is not None:
        scenario = scenario.with_settings(h=args.h)
    _emit(io.write_trajectory_csv(_run(scenario, args.method, args.backend)), args.out)


def cmd_case_study(args):
    scenario, _ = preset_scenario(args.id)
    _emit(io.write_trajectory_csv(_run(scenario, args.method, args.backend)), args.out)


def cmd_export(args):
    scenario, _ = preset_scenario(args.id)
    _emit(io.serialize_scenario(scenario), args.out)


def cmd_sens_global(args):
    scenario = _load(args.scenario)
    ranges = ParamRanges()
    if args.vc_min is not None:
        ranges = ranges.restrict(v_c=(args.vc_min, ranges.bounds["v_c"][1]))
    summary = global_envelopes(
        scenario, ranges, n=args.n, seed=args.seed, grid_step=args.grid_step, workers=args.workers, backend=args.backend
    )
    _emit(io.write_envelope_csv(summary), args.out)


def cmd_sens_local(args):
    scenario = _load(args.scenario)
    params = tuple(args.parameters.split(",")) if args.parameters else SWEPT
    bad = [p for p in params if p not in SWEPT]
    if bad:
        raise InputError(f"unknown parameter {bad[0]!r}; choose from {', '.join(SWEPT)}")
    matrix = local_sensitivity(
        scenario, params, rel_step=args.rel_step, grid_step=args.grid_step, workers=args.workers, backend=args.backend
    )
    _emit(io.write_sensitivity_csv(matrix), args.out)


def cmd_sweep(args):
    if (args.preset is None) == (args.scenario is None):
        raise InputError("give exactly one of --preset or --scenario")
    if args.preset is not None:
        base, axes = preset_scenario(args.preset)
        if axes is None:
            axes = (None, None)
        axis1 = _axis(args.axis1) if args.axis1 else axes[0]
        axis2 = _axis(args.axis2) if args.axis2 else axes[1]
        if axis1 is None or axis2 is None:
            raise InputError(f"preset {args.preset} has no sweep axes; pass --axis1 and --axis2")
    else:
        if not (args.axis1 and args.axis2):
            raise InputError("--scenario sweeps need --axis1 and --axis2")
        base = _load(args.scenario)
        axis1, axis2 = _axis(args.axis1), _axis(args.axis2)
    grid = run_sweep_2d(base, axis1, axis2, workers=args.workers, backend=args.backend)
    _emit(io.write_grid_csv(grid), args.out)
    if args.svg:
        _emit(io.render_heatmap_svg(grid, args.metric), args.svg)


def build_parser():
    parser = _Parser(prog="protestsim", description="Police/protester interaction dynamics.")
    parser.add_argument("--backend", choices=("numba", "numpy"), default=None,
                        help="kernel backend (default: numba unless PROTESTSIM_DISABLE_NUMBA is set)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--method", choices=("discrete", "ode"), default="ode")
    p.add_argument("--dt", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("case-study", help="run a named preset")
    p.add_argument("id", choices=sorted(PRESETS))
    p.add_argument("--method", choices=("discrete", "ode"), default="ode")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_case_study)

    p = sub.add_parser("export-scenario", help="write a preset as a scenario document")
    p.add_argument("id", choices=sorted(PRESETS))
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("sensitivity", help="global envelopes or local sensitivity functions")
    sens = p.add_subparsers(dest="kind", required=True)
    g = sens.add_parser("global")
    g.add_argument("--scenario", required=True)
    g.add_argument("--n", type=int, default=200)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--vc-min", type=float, help="raise the lower end of the v_c sampling range")
    g.add_argument("--grid-step", type=float, default=1.0)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_sens_global)
    loc = sens.add_parser("local")
    loc.add_argument("--scenario", required=True)
    loc.add_argument("--rel-step", type=float, default=1e-4)
    loc.add_argument("--parameters", help=f"comma-separated subset of {','.join(SWEPT)}")
    loc.add_argument("--grid-step", type=float, default=1.0)
    loc.add_argument("--workers", type=int, default=1)
    loc.add_argument("--out", required=True)
    loc.set_defaults(func=cmd_sens_local)

    p = sub.add_parser("sweep", help="two-parameter heat-map sweep")
    p.add_argument("--preset")
    p.add_argument("--scenario")
    p.add_argument("--axis1", help="target:start:step:stop")
    p.add_argument("--axis2", help="target:start:step:stop")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--svg")
    p.add_argument("--metric", choices=("police", "protester"), default="police")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, ValidationError, io.ScenarioSyntaxError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
