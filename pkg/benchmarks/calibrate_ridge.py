"""Pick the first-step ridge by matching uncorrected RMSE_Lambda at N=200.

The N=100 cells used by the acceptance suite are deliberately left out, so
they act as an out-of-sample check of the chosen value.

    python benchmarks/calibrate_ridge.py --reps 20
"""
import argparse
import logging
import warnings

import numpy as np

from mnar.benchmark import BenchmarkCell, BenchmarkSpec, run_benchmark
from mnar.estimator import EstimatorConfig
from mnar.step1 import Step1Config
from mnar.step2 import Step2Config

# uncorrected RMSE_Lambda reported for the N=200 MAR cells
TARGETS = {30: 0.335, 100: 0.217}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--grid", type=float, nargs="+", default=[1e4, 2e4, 3e4, 5e4])
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    warnings.simplefilter("ignore")
    logging.disable(logging.WARNING)
    cells = tuple(BenchmarkCell(200, t) for t in TARGETS)
    best = None
    for nu in args.grid:
        est = EstimatorConfig(step1=Step1Config(nu, nu), step2=Step2Config(1.0, 10.0, 1.0), debias=False)
        spec = BenchmarkSpec(cells=cells, reps=args.reps, seed=2024, estimator=est, methods=("ORG",))
        res = run_benchmark(spec, threads=args.threads)
        got = {r.cell.horizon: r.metrics["ORG"].rmse_lambda for r in res}
        loss = float(np.sqrt(np.mean([(got[t] - TARGETS[t]) ** 2 for t in TARGETS])))
        print(f"nu={nu:g} " + " ".join(f"T={t}:{got[t]:.3f}" for t in TARGETS) + f" loss={loss:.4f}", flush=True)
        if best is None or loss < best[1]:
            best = (nu, loss)
    print(f"chosen nu1=nu2={best[0]:g}")


if __name__ == "__main__":
    main()
