"""Time the compiled kernels against the numpy fallback.

Each backend runs in its own interpreter, because ``MNAR_NUMBA`` is read once
at import.

    python benchmarks/bench_kernels.py --n 100 200 --horizon 30 100
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from mnar import SimConfig, simulate, build_weighted_panel, Step1Config, fit_step1
from mnar._kernels import backend, lag_moments, row_lag
from mnar.missingness import MissingModel

n, horizon, repeat = map(int, sys.argv[1:4])
sim = simulate(SimConfig(n1=n, n2=n, horizon=horizon, seed=1, burn_in=20))
wp = build_weighted_panel(sim.panel, MissingModel.known(sim.probs))
zc, zl = wp.z_centered[1:], wp.z_lag_centered
w1, w2 = sim.nets.w1, sim.nets.w2
rows, cols = sim.nets.w1_rows, sim.nets.w2_cols


def best(f):
    f()  # compile / warm caches
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        f()
        out.append(time.perf_counter() - t0)
    return min(out)


print(json.dumps({
    "backend": backend(),
    "row_lag": best(lambda: row_lag(zl, w1, rows)),
    "lag_moments": best(lambda: lag_moments(zc, zl, w1, w2, rows, cols)),
    "fit_step1": best(lambda: fit_step1(wp, sim.nets, Step1Config(3e4, 3e4))),
}))
"""


def run(flag, n, horizon, repeat):
    env = dict(os.environ, MNAR_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", WORKER, str(n), str(horizon), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, nargs="+", default=[100, 200])
    ap.add_argument("--horizon", type=int, nargs="+", default=[30, 100])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'N':>5} {'T':>5} {'kernel':>12} {'numpy s':>10} {'numba s':>10} {'speedup':>8}")
    for n in args.n:
        for horizon in args.horizon:
            ref = run("0", n, horizon, args.repeat)
            fast = run("1", n, horizon, args.repeat)
            if fast["backend"] != "numba":
                print("numba is not available; only the numpy path was timed")
            for k in ("row_lag", "lag_moments", "fit_step1"):
                print(f"{n:>5} {horizon:>5} {k:>12} {ref[k]:>10.4f} {fast[k]:>10.4f} {ref[k] / fast[k]:>8.2f}")


if __name__ == "__main__":
    main()
