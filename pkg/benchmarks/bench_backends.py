"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_backends.py --repeat 3

Compilation happens in an untimed warm-up call, so the numba figures are
steady-state. Both backends must agree; the script reports the largest
difference alongside the timings.
"""

import argparse
import time

import numpy as np

from lhtwpa import _backend
from lhtwpa import depletion as dp
from lhtwpa import lattice as lt
from lhtwpa import mixing as mx
from lhtwpa.line_model import LineParameters


def fig2_line():
    return LineParameters.from_engineering(1670, 9.6, 667, 10, "left")


def fwm_case(cells):
    line = fig2_line()
    pump = mx.PumpDrive(2 * np.pi * 7.5e9, 0.5)

    def run():
        return np.array([dp.gain_with_depletion(line, pump, 0.08, cells, r) for r in (1e-4, 1e-2, 0.1, 0.3)])

    return run


def lattice_case(cells):
    line = fig2_line()
    tone = lt.DriveTone(2 * np.pi * 12e9, 2e-4 * line.critical_current)
    cfg = lt.driven_config(line, cells, [tone])

    def run():
        return lt.simulate(cfg).flux

    return run


def timed(run, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = run()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--fwm-cells", type=int, default=1000)
    parser.add_argument("--lattice-cells", type=int, default=100)
    args = parser.parse_args(argv)

    cases = {
        f"dp45 four-tone, {args.fwm_cells} cells x 4 levels": fwm_case(args.fwm_cells),
        f"lattice, {args.lattice_cells} cells": lattice_case(args.lattice_cells),
    }
    saved = _backend.get_backend()
    print(f"{'case':<40} {'numba s':>10} {'numpy s':>10} {'speedup':>8} {'max diff':>10}")
    try:
        for name, run in cases.items():
            _backend.set_backend("numba")
            run()  # compile
            t_fast, fast = timed(run, args.repeat)
            _backend.set_backend("numpy")
            t_slow, slow = timed(run, 1)
            diff = np.max(np.abs(slow - fast)) / max(np.max(np.abs(fast)), 1e-300)
            print(f"{name:<40} {t_fast:>10.4f} {t_slow:>10.4f} {t_slow / t_fast:>8.1f} {diff:>10.2e}")
    finally:
        _backend.set_backend(saved)


if __name__ == "__main__":
    main()
