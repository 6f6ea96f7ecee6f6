"""K-fold cross-validation over the penalty grid.

Folds partition the observed (i, j, t) entries. Each fold is hidden on top
of the existing mask, the whole pipeline is refit, and the rolling-recovery
predictions are scored against the hidden values. First-step fits depend
only on (nu1, nu2) and are reused across the second-step grid.
"""
from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .estimator import EstimatorConfig, fit_weighted
from .evaluate import rolling_recover
from .missingness import PROB_FLOOR, build_weighted_panel, fit_missing_model
from .model import Covariates, NetworkPair, PanelSeries
from .step1 import Step1Config, build_problem, fit_step1
from .step2 import Step2Config

log = logging.getLogger(__name__)

SCHEMES = ("entry", "time")
MIN_PER_FOLD = 50


@dataclass(frozen=True)
class CvGrid:
    nu1: tuple = (0.1, 1.0, 10.0)
    nu2: tuple = (0.1, 1.0, 10.0)
    nu3: tuple = (0.1, 1.0, 10.0)
    nu4: tuple = tuple(np.logspace(-2, 2, 5).tolist())
    mix_alpha: tuple = (0.5, 0.8, 1.0)

    def __post_init__(self):
        for name in ("nu1", "nu2", "nu3", "nu4", "mix_alpha"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ConfigError(f"grid for {name} is empty")
            object.__setattr__(self, name, vals)

    def step1_points(self):
        return list(itertools.product(self.nu1, self.nu2))

    def step2_points(self):
        return list(itertools.product(self.nu3, self.nu4, self.mix_alpha))

    def __len__(self):
        return len(self.step1_points()) * len(self.step2_points())


@dataclass(frozen=True)
class CvPlan:
    folds: int = 5
    grid: CvGrid = field(default_factory=CvGrid)
    scheme: str = "entry"
    seed: int = 0
    mechanism: str = "MAR"
    rounds: int | None = None
    debias: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError("need at least two folds")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")


@dataclass(frozen=True, eq=False)
class CvResult:
    best: dict  # nu1, nu2, nu3, nu4, mix_alpha
    scores: np.ndarray  # (n_points, folds) held-out RMSE, inf where the fit failed
    points: list

    def estimator_config(self, base: EstimatorConfig | None = None) -> EstimatorConfig:
        base = base or EstimatorConfig()
        b = self.best
        return EstimatorConfig(
            step1=Step1Config(b["nu1"], b["nu2"], base.step1.tol, base.step1.max_iter, base.step1.denominator_floor),
            step2=Step2Config(b["nu3"], b["nu4"], b["mix_alpha"]),
            rounds=base.rounds,
            mechanism=base.mechanism,
            prob_floor=base.prob_floor,
            debias=base.debias,
        )


def assign_folds(mask, folds, scheme="entry", seed=0):
    """Fold label per entry, -1 where unobserved. Seed-deterministic."""
    mask = np.asarray(mask)
    labels = np.full(mask.shape, -1, dtype=np.int64)
    obs = np.flatnonzero(mask)
    if obs.size < folds:
        raise ConfigError(f"only {obs.size} observed entries for {folds} folds")
    if obs.size < folds * MIN_PER_FOLD:
        raise ConfigError(f"need at least {folds * MIN_PER_FOLD} observed entries, have {obs.size}")
    if scheme == "entry":
        rng = np.random.default_rng(seed)
        perm = rng.permutation(obs.size)
        labels.flat[obs[perm]] = np.arange(obs.size) % folds
    else:
        T = mask.shape[0]
        if T < folds:
            raise ConfigError(f"time-blocked folds need T >= {folds}")
        block = np.array_split(np.arange(T), folds)
        for k, ts in enumerate(block):
            sub = labels[ts]
            sub[mask[ts] == 1] = k
            labels[ts] = sub
    return labels


def _score_fold(panel, nets, cov, plan: CvPlan, labels, k):
    grid = plan.grid
    held = labels == k
    train = panel.with_mask(panel.mask * ~held)
    missing = fit_missing_model(train, cov, plan.mechanism)
    wp = build_weighted_panel(train, missing, PROB_FLOOR)
    problem = build_problem(wp, nets)
    truth = panel.responses[held]
    out = []
    for nu1, nu2 in grid.step1_points():
        s1cfg = Step1Config(nu1, nu2)
        try:
            s1 = fit_step1(wp, nets, s1cfg, problem)
        except NumericalError as exc:
            log.info("fold %d: step 1 failed at nu1=%g nu2=%g (%s)", k, nu1, nu2, exc)
            out.extend([np.inf] * len(grid.step2_points()))
            continue
        bias = None
        for nu3, nu4, mix in grid.step2_points():
            cfg = EstimatorConfig(s1cfg, Step2Config(nu3, nu4, mix), plan.rounds, plan.mechanism, debias=plan.debias)
            try:
                rep = fit_weighted(wp, nets, cov, cfg, missing, problem, s1, bias)
            except NumericalError as exc:
                log.info("fold %d: fit failed (%s)", k, exc)
                out.append(np.inf)
                continue
            bias = rep.bias
            a_hat = rolling_recover(rep.adjusted, wp.z, nets, cov)
            err = np.sqrt(np.mean((a_hat[held] - truth) ** 2))
            out.append(float(err) if np.isfinite(err) else np.inf)
    return out


def cross_validate(panel: PanelSeries, nets: NetworkPair, cov: Covariates, plan: CvPlan | None = None) -> CvResult:
    plan = plan or CvPlan()
    labels = assign_folds(panel.mask, plan.folds, plan.scheme, plan.seed)
    grid = plan.grid
    points = [
        dict(nu1=a, nu2=b, nu3=c, nu4=d, mix_alpha=e)
        for (a, b) in grid.step1_points()
        for (c, d, e) in grid.step2_points()
    ]
    if plan.threads > 1:
        with ThreadPoolExecutor(plan.threads) as ex:
            cols = list(ex.map(lambda k: _score_fold(panel, nets, cov, plan, labels, k), range(plan.folds)))
    else:
        cols = [_score_fold(panel, nets, cov, plan, labels, k) for k in range(plan.folds)]
    scores = np.array(cols).T
    mean = scores.mean(axis=1)
    if not np.isfinite(mean).any():
        raise NumericalError("every grid point failed in at least one fold")
    best_val = mean.min()
    tied = [i for i in range(len(points)) if mean[i] <= best_val * (1 + 1e-12)]
    # ties go to the heaviest penalties
    pick = max(tied, key=lambda i: tuple(points[i][k] for k in ("nu1", "nu2", "nu3", "nu4", "mix_alpha")))
    return CvResult(points[pick], scores, points)
