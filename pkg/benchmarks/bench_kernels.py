"""Throughput comparison of the compiled and pure-Python kernel backends.

The design searches spend nearly all their time in these scalar
routines, so the per-call ratio here translates directly into MaxiMin
wall-clock time. Run:

    python benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ce_lcrt import _kernels_py

try:
    from ce_lcrt import _kernels
except ImportError:
    _kernels = None

RHO = (0.05, 0.025, 0.05, 0.025, 0.02, 0.01, 0.5)
ECON = (1.0, 3000.0, 20000.0)


CASES = {
    "eigen_min": lambda k: k.eigen_min(*RHO, 4.0, 12.0),
    "theta_crxo": lambda k: k.theta_crxo(*RHO, 20.0 / 3.0),
    "theta_pa": lambda k: k.theta_pa(*RHO, 20.0 / 3.0, 4.0),
    "theorem2_variance": lambda k: k.theorem2_variance(
        30.0, 4.0, 12.0, 60.0, 150.0, 2700.0, *RHO, *ECON),
    "crxo_variance": lambda k: k.crxo_variance(30.0, 4.0, 12.0, 0.5, *RHO, *ECON),
    "sw_unit_variance": lambda k: k.sw_unit_variance(4.0, 3.0, 12.0, *RHO, *ECON),
    "sw_decimal_design": lambda k: k.sw_decimal_design(
        4.0, 3.0, *RHO, *ECON, 300000.0, 3000.0, 250.0, 200.0),
}

LOOPS = {"sw_decimal_design": 2_000}
DEFAULT_LOOPS = 50_000


def time_case(fn, backend, loops: int, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        for _ in range(loops):
            fn(backend)
        best = min(best, (time.perf_counter() - start) / loops)
    return best


def run_mmd_benchmark() -> dict[str, float]:
    """End-to-end check: one MaxiMin cell under each backend."""
    import importlib
    import os
    import subprocess
    import sys

    script = (
        "import time\n"
        "from fractions import Fraction\n"
        "from ce_lcrt.correlation import IccVector, IccBox\n"
        "from ce_lcrt.designs import TrialLayout, DesignFamily, BudgetModel\n"
        "from ce_lcrt.variance import EconModel\n"
        "from ce_lcrt.maximin import mmd_search\n"
        "box = IccBox(IccVector(0.05,0.025,0.04,0.02,0.01,0.005,0.5),"
        "IccVector(0.10,0.040,0.08,0.032,0.02,0.010,0.8))\n"
        "econ = EconModel(1.0,3000.0,20000.0,4000.0)\n"
        "budget = BudgetModel(300000.0,3000.0,250.0,100,200)\n"
        "layout = TrialLayout(DesignFamily.SW, 6, sequences=5)\n"
        "t0 = time.perf_counter()\n"
        "mmd_search(layout, box, econ, budget)\n"
        "print(time.perf_counter() - t0)\n"
    )
    out = {}
    for label, env_value in (("cython", "0"), ("python", "1")):
        env = dict(os.environ, CE_LCRT_FORCE_PY=env_value)
        result = subprocess.run([sys.executable, "-c", script], env=env,
                                capture_output=True, text=True, check=True)
        out[label] = float(result.stdout.strip())
    return out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--skip-e2e", action="store_true",
                        help="skip the end-to-end MaxiMin comparison")
    args = parser.parse_args()

    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.insert(0, ("cython", _kernels))
    else:
        print("compiled kernels not importable; timing the fallback only")

    print(f"{'routine':<20} " + " ".join(f"{name:>12}" for name, _ in backends)
          + ("      speedup" if len(backends) == 2 else ""))
    for case, fn in CASES.items():
        loops = LOOPS.get(case, DEFAULT_LOOPS)
        times = [time_case(fn, backend, loops, args.repeat) for _, backend in backends]
        row = f"{case:<20} " + " ".join(f"{t * 1e9:>10.0f}ns" for t in times)
        if len(times) == 2:
            row += f"  {times[1] / times[0]:>9.1f}x"
        print(row)

    if not args.skip_e2e and _kernels is not None:
        print("\nend-to-end MaxiMin cell (stepped wedge, Q=5, J=6):")
        timings = run_mmd_benchmark()
        for label, seconds in timings.items():
            print(f"  {label:>7}: {seconds:.2f}s")
        print(f"  speedup: {timings['python'] / timings['cython']:.1f}x")


if __name__ == "__main__":
    main()
