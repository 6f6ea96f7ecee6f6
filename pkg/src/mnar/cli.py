"""Command-line front end.

    mnar simulate  --out DIR [--config cfg.json] [--seed N] [--dense]
    mnar estimate  --data DIR --out DIR [--config cfg.json]
    mnar complete  --data DIR --fit DIR/fit.json --out DIR [--dense]
    mnar benchmark --out DIR [--config cfg.json] [--seed N] [--threads N]
    mnar cv        --data DIR --out DIR [--config cfg.json] [--seed N] [--threads N]

Exit codes: 0 success, 1 usage or input problems, 2 numeric failure.
``MNAR_LOG`` sets the log level (default WARNING).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from . import fileio as fio
from .benchmark import (
    DEFAULT_ESTIMATOR,
    DEFAULT_SVT,
    BenchmarkCell,
    BenchmarkSpec,
    render_table,
    results_csv,
    run_benchmark,
)
from .errors import MNARError, NumericalError
from .estimator import EstimatorConfig, fit_mnar
from .evaluate import rolling_recover
from .missingness import MissingModel, build_weighted_panel
from .simulate import SimConfig, simulate
from .step2 import Step2Config
from .tuning import CvGrid, CvPlan, cross_validate

log = logging.getLogger("mnar")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(path) -> dict:
    if path is None:
        return {}
    cfg = fio.read_json(path)
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    return cfg


def _require(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise UsageError(f"--{n} is required for '{args.command}'")


def _estimator_config(cfg: dict) -> EstimatorConfig:
    if "estimator" in cfg:
        return EstimatorConfig.from_dict(cfg["estimator"])
    return DEFAULT_ESTIMATOR


# --------------------------------------------------------------------------- commands


def cmd_simulate(args, cfg):
    _require(args, "out")
    sim_cfg = SimConfig.from_dict(cfg.get("simulate", {}))
    if args.seed is not None:
        sim_cfg = sim_cfg.with_(seed=args.seed)
    sim = simulate(sim_cfg)
    out = Path(args.out)
    fio.write_dataset(out, sim.panel, sim.nets, sim.cov)
    truth = fio.params_to_json(sim.params)
    truth.update(config=sim_cfg.to_dict(), probs=sim.probs.tolist(), y0=sim.y0.tolist())
    fio.write_json(out / fio.TRUTH_FILE, truth)
    fio.write_values(out / fio.TRUTH_PANEL_FILE, sim.truth)
    if args.dense:
        fio.write_dense(out / "dense", sim.panel.responses, "Y")
        fio.write_dense(out / "dense", sim.panel.mask, "R")
    log.info("wrote simulated panel %s to %s", sim.panel.shape, out)


def _fit_json(rep, panel) -> dict:
    s1 = rep.step1
    out = {
        "shape": list(panel.shape),
        "backend": _kernels.backend(),
        "config": rep.config.to_dict(),
        "missing": {
            "mechanism": rep.missing.mechanism,
            "alpha": None if rep.missing.alpha is None else rep.missing.alpha.tolist(),
            "probs": rep.missing.probs.tolist(),
            "iterations": rep.missing.iterations,
            "converged": bool(rep.missing.converged),
        },
        "step1": {
            "objective_trace": list(s1.objective_trace),
            "iterations": s1.iterations,
            "converged": bool(s1.converged),
            "kappa": s1.kappa.tolist(),
            "corr_gamma": s1.corr_gamma.tolist(),
        },
        "debias": None,
        "raw": fio.params_to_json(rep.raw),
        "adjusted": fio.params_to_json(rep.adjusted),
        "condition_number": rep.condition_number if np.isfinite(rep.condition_number) else None,
        "timings": dict(rep.timings),
    }
    if rep.bias is not None:
        states = [*rep.bias.history, rep.bias]
        out["debias"] = {
            "rounds": rep.bias.round,
            "b_hat_sup": [float(np.abs(s.b_hat).max()) for s in states],
        }
    return out


def cmd_estimate(args, cfg):
    _require(args, "data", "out")
    panel, nets, cov = fio.read_dataset(args.data)
    rep = fit_mnar(panel, nets, cov, _estimator_config(cfg))
    out = Path(args.out)
    fio.write_json(out / fio.FIT_FILE, _fit_json(rep, panel))
    fio.write_matrix(out / "b_hat.csv", rep.adjusted.intercept_b)
    fio.write_matrix(out / "b_hat_raw.csv", rep.raw.intercept_b)
    log.info("fit written to %s", out)


def cmd_complete(args, cfg):
    _require(args, "data", "fit", "out")
    panel, nets, cov = fio.read_dataset(args.data)
    fit_path = Path(args.fit)
    fit = fio.read_json(fit_path)
    which = args.which
    sidecar = fit_path.parent / ("b_hat.csv" if which == "adjusted" else "b_hat_raw.csv")
    b = fio.read_matrix(sidecar) if sidecar.is_file() else None
    params = fio.params_from_json(fit[which], b)
    probs = np.asarray(fit["missing"]["probs"], float)
    wp = build_weighted_panel(panel, MissingModel.known(probs, fit["missing"]["mechanism"]))
    a_hat = rolling_recover(params, wp.z, nets, cov)
    filled = np.where(panel.mask == 1, panel.responses, a_hat)
    out = Path(args.out)
    fio.write_values(out / "recovered.csv", a_hat)
    fio.write_values(out / "completed.csv", filled, panel.mask)
    if args.dense:
        fio.write_dense(out / "dense", filled, "completed")


def _benchmark_spec(cfg, seed) -> BenchmarkSpec:
    bcfg = cfg.get("benchmark", {})
    cells = tuple(
        BenchmarkCell(int(c["n"]), int(c["horizon"]), c.get("mechanism", "MAR"))
        for c in bcfg.get("cells", [{"n": 20, "horizon": 10}])
    )
    svt = Step2Config(**cfg["svt"]) if "svt" in cfg else DEFAULT_SVT
    return BenchmarkSpec(
        cells=cells,
        reps=int(bcfg.get("reps", 200)),
        seed=int(bcfg.get("seed", 0) if seed is None else seed),
        base=SimConfig.from_dict(cfg.get("simulate", {})),
        estimator=_estimator_config(cfg),
        svt=svt,
    )


def cmd_benchmark(args, cfg):
    _require(args, "out")
    spec = _benchmark_spec(cfg, args.seed)
    res = run_benchmark(spec, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(results_csv(res), encoding="utf-8")
    table = render_table(res)
    (out / "results.txt").write_text(table, encoding="utf-8")
    print(table, end="")


def cmd_cv(args, cfg):
    _require(args, "data", "out")
    panel, nets, cov = fio.read_dataset(args.data)
    c = dict(cfg.get("cv", {}))
    grid = CvGrid(**c.pop("grid", {}))
    if args.seed is not None:
        c["seed"] = args.seed
    plan = CvPlan(grid=grid, threads=args.threads, **c)
    res = cross_validate(panel, nets, cov, plan)
    fio.write_json(Path(args.out) / "cv.json", {
        "best": res.best,
        "points": res.points,
        "mean_scores": [float(v) if np.isfinite(v) else None for v in res.scores.mean(axis=1)],
    })
    print(" ".join(f"{k}={v:g}" for k, v in res.best.items()))


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "complete": cmd_complete,
    "benchmark": cmd_benchmark,
    "cv": cmd_cv,
}


def _origin(exc) -> str:
    """Module where the exception was raised."""
    tb = exc.__traceback__
    while tb is not None and tb.tb_next is not None:
        tb = tb.tb_next
    return tb.tb_frame.f_globals.get("__name__", "?") if tb is not None else "?"


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mnar", description="Matrix network autoregression for incomplete panels.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="overrides the seed in the config")
    p.add_argument("--threads", type=int, default=1, help="worker processes/threads")
    p.add_argument("--out", help="output directory")
    p.add_argument("--data", help="input directory (panel.csv, networks, covariates.csv)")
    p.add_argument("--fit", help="fit.json written by 'estimate'")
    p.add_argument("--which", choices=("adjusted", "raw"), default="adjusted",
                   help="parameter set used by 'complete'")
    p.add_argument("--dense", action="store_true", help="also write one dense CSV per period")
    return p


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("MNAR_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help or a parse error
        return int(exc.code or 0)
    if args.threads < 1:
        print("mnar: error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _load_config(args.config)
        COMMANDS[args.command](args, cfg)
    except NumericalError as exc:
        print(f"mnar: numeric failure in {_origin(exc)}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, MNARError, OSError, ValueError, TypeError, KeyError) as exc:
        print(f"mnar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
