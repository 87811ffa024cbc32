"""Compare the numba and pure-numpy kernels on one chunk of a heat-map sweep.

    python3 benchmarks/bench_backends.py [--cells N] [--repeat R]
"""

import argparse
import time

import numpy as np

from protestsim import runner
from protestsim._kernels import HAVE_NUMBA, n_steps_for
from protestsim.sweep import AxisSpec, cell_scenarios, preset_scenario


def chunk(n_cells):
    base, (tau_axis, v_axis) = preset_scenario("heatmap-A40")
    cells = cell_scenarios(base, AxisSpec("tau_c", tau_axis.values[:8]), v_axis)
    return base, cells[:n_cells]


def timed(method, y0, par, step, n_steps, backend, repeat):
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        res = runner.run_arrays(method, y0, par, step, n_steps, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, res


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    base, cells = chunk(args.cells)
    y0, par = runner.pack(cells)
    backends = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]
    print(f"{len(cells)} cells, best of {args.repeat}")
    for method, step in (("ode", base.settings.h), ("discrete", base.settings.dt)):
        n_steps = n_steps_for(base.settings.t_max, step)
        if "numba" in backends:  # compile outside the timing
            runner.run_arrays(method, y0[:1], par[:1], step, 10, backend="numba")
        times, finals = {}, {}
        for backend in backends:
            times[backend], res = timed(method, y0, par, step, n_steps, backend, args.repeat)
            finals[backend] = res.final
        line = "  ".join(f"{b} {t:8.3f} s" for b, t in times.items())
        if len(times) == 2:
            diff = float(np.abs(finals["numba"] - finals["numpy"]).max())
            line += f"  speed-up x{times['numpy'] / times['numba']:.1f}  max |diff| {diff:.2e}"
        print(f"{method:9s} {line}")


if __name__ == "__main__":
    main()
