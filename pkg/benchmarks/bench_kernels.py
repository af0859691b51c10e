"""Compiled kernels against the pure-Python reference.

Times the filter kernel on a stable section and one full scenario run per
backend. The scenario runs in a subprocess so the backend choice made at
import time applies cleanly.

    python3 benchmarks/bench_kernels.py [--samples N] [--repeat R]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from dvpp import _kernels_py
from dvpp.control import DynamicFactor, ResidualFactor, build_desired, build_participation
from dvpp.tf import multiply

try:
    from dvpp import _kernels as _compiled
except ImportError:
    _compiled = None

SCENARIO_SNIPPET = (
    "import time; from dvpp import BACKEND; from dvpp.scenario import load_preset, run; "
    "sc = load_preset('case2_load_jump_dpf'); t0 = time.perf_counter(); run(sc); "
    "print(BACKEND, time.perf_counter() - t0)"
)

# stable section: desired behavior times the wind participation factor
SECTION = multiply(
    build_participation([DynamicFactor(0.4, 3.5), DynamicFactor(0.6, 0.5), ResidualFactor(0.05)], 0.01)[0],
    build_desired(6.5, 0.25, 0.01).realized,
)


def bench_filter(mod, n, repeat):
    tf = SECTION
    bh, bl = tf._split_num
    ah, al = tf._split_den
    u = np.random.default_rng(0).normal(size=n) * 1e-3

    def once():
        mod.df2t_filter(bh, bl, ah, al, np.zeros(tf.order), np.zeros(tf.order), u)

    return min(timeit.repeat(once, number=1, repeat=repeat))


def bench_scenario(pure):
    env = dict(os.environ, DVPP_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", SCENARIO_SNIPPET], env=env,
                         capture_output=True, text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    py = bench_filter(_kernels_py, args.samples, args.repeat)
    print(f"df2t_filter, order-{SECTION.order} section, {args.samples} samples")
    print(f"  python    {py * 1e3:9.2f} ms")
    if _compiled is None:
        print("  compiled  not built")
    else:
        cy = bench_filter(_compiled, args.samples, args.repeat)
        print(f"  compiled  {cy * 1e3:9.2f} ms   ({py / cy:.0f}x)")

    print("full scenario run, 6001 ticks")
    for pure in (True, False):
        backend, secs = bench_scenario(pure)
        print(f"  {backend:<9} {secs:9.3f} s")


if __name__ == "__main__":
    main()
