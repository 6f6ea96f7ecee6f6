"""The full two-step pipeline: missingness fit, network effects, debiasing, intercepts."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .debias import BiasState, debias_rounds
from .missingness import PROB_FLOOR, MissingModel, WeightedPanel, build_weighted_panel, fit_missing_model
from .model import Covariates, ModelParams, NetworkPair, PanelSeries
from .step1 import Step1Config, Step1Fit, Step1Problem, build_problem, fit_step1
from .step2 import Step2Config, Step2Fit, fit_step2


@dataclass(frozen=True)
class EstimatorConfig:
    step1: Step1Config = field(default_factory=Step1Config)
    step2: Step2Config = field(default_factory=Step2Config)
    rounds: int | None = None  # None picks by horizon
    mechanism: str = "MAR"
    prob_floor: float = PROB_FLOOR
    debias: bool = True

    def to_dict(self) -> dict:
        return {
            "step1": vars(self.step1).copy(),
            "step2": vars(self.step2).copy(),
            "rounds": self.rounds,
            "mechanism": self.mechanism,
            "prob_floor": self.prob_floor,
            "debias": self.debias,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimatorConfig":
        d = dict(d)
        s1 = Step1Config(**d.pop("step1", {}))
        s2 = Step2Config(**d.pop("step2", {}))
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(step1=s1, step2=s2, **known)


@dataclass(frozen=True, eq=False)
class FitReport:
    missing: MissingModel
    step1: Step1Fit
    bias: BiasState | None
    raw: ModelParams  # first-step effects with their intercepts
    adjusted: ModelParams  # debiased effects with their intercepts (raw when debias is off)
    step2_raw: Step2Fit
    step2_adjusted: Step2Fit
    config: EstimatorConfig
    timings: dict = field(default_factory=dict)

    @property
    def condition_number(self) -> float:
        return self.bias.condition_number if self.bias is not None else float("nan")


def _params(lam, gam, s2: Step2Fit) -> ModelParams:
    return ModelParams(lam, gam, s2.beta_hat, s2.b_hat, s2.b_rank_hat)


def fit_weighted(wp: WeightedPanel, nets: NetworkPair, cov: Covariates, cfg: EstimatorConfig,
                 missing: MissingModel, problem: Step1Problem | None = None,
                 step1: Step1Fit | None = None, bias: BiasState | None = None) -> FitReport:
    """Everything downstream of the IPW matrices.

    ``problem``, ``step1`` and ``bias`` can be handed in when they were
    computed for the same weighted panel (cross-validation reuses them).
    """
    timings = {}
    t0 = time.perf_counter()
    if step1 is None:
        step1 = fit_step1(wp, nets, cfg.step1, problem)
    timings["step1"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if cfg.debias and bias is None:
        bias = debias_rounds(step1, wp, nets, cfg.rounds)
    if not cfg.debias:
        bias = None
    timings["debias"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    lam, gam = step1.lambda_hat, step1.gamma_hat
    s2_raw = fit_step2(wp, nets, cov, lam, gam, cfg.step2)
    raw = _params(lam, gam, s2_raw)
    if bias is None:
        s2_adj, adjusted = s2_raw, raw
    else:
        lam_a, gam_a = bias.split(wp.n1)
        s2_adj = fit_step2(wp, nets, cov, lam_a, gam_a, cfg.step2)
        adjusted = _params(lam_a, gam_a, s2_adj)
    timings["step2"] = time.perf_counter() - t0
    return FitReport(missing, step1, bias, raw, adjusted, s2_raw, s2_adj, cfg, timings)


def fit_mnar(panel: PanelSeries, nets: NetworkPair, cov: Covariates, cfg: EstimatorConfig | None = None,
             missing: MissingModel | None = None) -> FitReport:
    cfg = cfg or EstimatorConfig()
    t0 = time.perf_counter()
    missing = missing or fit_missing_model(panel, cov, cfg.mechanism)
    wp = build_weighted_panel(panel, missing, cfg.prob_floor)
    t_miss = time.perf_counter() - t0
    t0 = time.perf_counter()
    problem = build_problem(wp, nets)
    t_prob = time.perf_counter() - t0
    report = fit_weighted(wp, nets, cov, cfg, missing, problem)
    report.timings.update(missing=t_miss, moments=t_prob)
    return report


def effects_vector(params: ModelParams):
    return np.r_[params.lam, params.gam]
