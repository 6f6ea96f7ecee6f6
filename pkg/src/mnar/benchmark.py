"""Monte-Carlo harness: simulate, fit all five methods, tabulate the errors."""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import svt_avg, svt_sep, svt_sum
from .errors import MNARError
from .estimator import EstimatorConfig, fit_mnar
from .evaluate import MethodErrors, MetricReport, mse, rolling_recover, test_error
from .missingness import build_weighted_panel
from .simulate import SimConfig, simulate
from .step1 import Step1Config
from .step2 import Step2Config

log = logging.getLogger(__name__)

METHODS = ("SEP", "AVG", "SUM", "ORG", "ADJ")
ROW_LABELS = {
    "rmse_lambda": "Lambda",
    "rmse_gamma": "Gamma",
    "rmse_beta": "beta(x100)",
    "rmse_b": "B",
    "rmse_a": "A",
    "test_error": "TestErr",
}

# Penalties used when a cell does not bring its own tuning. The first-step
# ridge is on the scale of the summed squared lags (order N^2 T), so small
# values barely regularize; see the README for how these were chosen.
DEFAULT_ESTIMATOR = EstimatorConfig(step1=Step1Config(3e4, 3e4), step2=Step2Config(1.0, 10.0, 1.0))
DEFAULT_SVT = Step2Config(1.0, 10.0, 1.0)


@dataclass(frozen=True)
class BenchmarkCell:
    n: int
    horizon: int
    mechanism: str = "MAR"
    estimator: EstimatorConfig | None = None
    svt: Step2Config | None = None


@dataclass(frozen=True)
class BenchmarkSpec:
    cells: tuple
    reps: int = 200
    seed: int = 0
    base: SimConfig = field(default_factory=SimConfig)
    estimator: EstimatorConfig = DEFAULT_ESTIMATOR
    svt: Step2Config = DEFAULT_SVT
    methods: tuple = METHODS

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        object.__setattr__(self, "cells", tuple(self.cells))


@dataclass(frozen=True, eq=False)
class CellResult:
    cell: BenchmarkCell
    metrics: dict  # method -> MetricReport
    failures: int
    reps: int


def replication_seeds(master_seed: int, n_cells: int, reps: int):
    """Independent 63-bit seeds per (cell, replication), fixed by the master seed."""
    root = np.random.SeedSequence(master_seed)
    return [
        [int(s.generate_state(1, np.uint64)[0] >> np.uint64(1)) for s in cell.spawn(reps)]
        for cell in root.spawn(n_cells)
    ]


def run_replication(cell: BenchmarkCell, seed: int, spec: BenchmarkSpec) -> dict:
    """Squared-error means (and test errors) of every method for one seed."""
    cfg = spec.base.with_(n1=cell.n, n2=cell.n, horizon=cell.horizon, mechanism=cell.mechanism, seed=seed)
    sim = simulate(cfg)
    est_cfg = cell.estimator or spec.estimator
    est_cfg = EstimatorConfig(est_cfg.step1, est_cfg.step2, est_cfg.rounds, cell.mechanism,
                              est_cfg.prob_floor, est_cfg.debias)
    svt_cfg = cell.svt or spec.svt
    truth_a = sim.conditional_means()
    p = sim.params
    out = {}

    rep = fit_mnar(sim.panel, sim.nets, sim.cov, est_cfg)
    wp = build_weighted_panel(sim.panel, rep.missing, est_cfg.prob_floor)
    for name, params in (("ORG", rep.raw), ("ADJ", rep.adjusted)):
        if name not in spec.methods:
            continue
        a_hat = rolling_recover(params, wp.z, sim.nets, sim.cov)
        out[name] = dict(
            lam=mse(params.lam, p.lam),
            gam=mse(params.gam, p.gam),
            beta=mse(params.beta, p.beta),
            b=mse(params.intercept_b, p.intercept_b),
            a=mse(a_hat, truth_a),
            test=test_error(a_hat, sim.truth, sim.panel.mask),
        )

    sep = svt_sep(wp, sim.cov, svt_cfg)
    static = {
        "SEP": sep,
        "AVG": [svt_avg(wp, sim.cov, svt_cfg, sep)],
        "SUM": [svt_sum(wp, sim.cov, svt_cfg)],
    }
    for name, fits in static.items():
        if name not in spec.methods:
            continue
        means = np.array([f.mean(sim.cov) for f in fits])
        a_hat = np.broadcast_to(means, truth_a.shape) if len(fits) == 1 else means
        out[name] = dict(
            beta=float(np.mean([mse(f.beta_hat, p.beta) for f in fits])),
            b=float(np.mean([mse(f.b_hat, p.intercept_b) for f in fits])),
            a=mse(a_hat, truth_a),
            test=test_error(a_hat, sim.truth, sim.panel.mask),
        )
    return out


def _run_one(args):
    cell, seed, spec = args
    try:
        return run_replication(cell, seed, spec)
    except MNARError as exc:
        log.warning("replication failed (cell n=%d T=%d seed=%d): %s", cell.n, cell.horizon, seed, exc)
        return None


def run_benchmark(spec: BenchmarkSpec, threads: int = 1) -> list[CellResult]:
    seeds = replication_seeds(spec.seed, len(spec.cells), spec.reps)
    jobs = [(cell, s, spec) for cell, cs in zip(spec.cells, seeds) for s in cs]
    if threads > 1:
        with ProcessPoolExecutor(threads) as ex:
            results = list(ex.map(_run_one, jobs, chunksize=1))
    else:
        results = [_run_one(j) for j in jobs]
    table = []
    for c, cell in enumerate(spec.cells):
        chunk = results[c * spec.reps:(c + 1) * spec.reps]
        errs = {m: MethodErrors() for m in spec.methods}
        failures = 0
        for r in chunk:
            if r is None:
                failures += 1
                continue
            for m in spec.methods:
                errs[m].add(**r[m])
        table.append(CellResult(cell, {m: errs[m].report() for m in spec.methods}, failures, spec.reps))
    return table


def _fmt(v):
    return "-" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.3f}"


def render_table(results: list[CellResult]) -> str:
    """Cells stacked vertically, one row per measure, one column per method."""
    methods = list(results[0].metrics) if results else list(METHODS)
    head = f"{'N':>5} {'T':>5} {'Mech':>4} {'Measure':>11} " + " ".join(f"{m:>7}" for m in methods) + f" {'Fail':>5}"
    lines = [head, "-" * len(head)]
    for res in results:
        c = res.cell
        for k, (attr, label) in enumerate(ROW_LABELS.items()):
            left = f"{c.n:>5} {c.horizon:>5} {c.mechanism:>4}" if k == 0 else " " * 16
            vals = " ".join(f"{_fmt(getattr(res.metrics[m], attr)):>7}" for m in methods)
            fail = f"{res.failures:>5}" if k == 0 else ""
            lines.append(f"{left} {label:>11} {vals} {fail}".rstrip())
    return "\n".join(lines) + "\n"


def results_csv(results: list[CellResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "horizon", "mechanism", "method", *ROW_LABELS, "failures", "reps"])
    for res in results:
        c = res.cell
        for m, rep in res.metrics.items():
            w.writerow([c.n, c.horizon, c.mechanism, m,
                        *(repr(float(getattr(rep, a))) for a in ROW_LABELS), res.failures, res.reps])
    return buf.getvalue()


def cell_report(results: list[CellResult], n, horizon, mechanism="MAR") -> dict[str, MetricReport]:
    for res in results:
        if (res.cell.n, res.cell.horizon, res.cell.mechanism) == (n, horizon, mechanism):
            return res.metrics
    raise KeyError((n, horizon, mechanism))
