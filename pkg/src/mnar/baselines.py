"""Static low-rank-plus-covariates completion baselines that ignore the networks.

SEP fits every period on its own, AVG averages the SEP fits and SUM fits the
pooled least-squares objective, whose minimizer is the second-step closed
form applied to the mean IPW matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .missingness import WeightedPanel
from .model import Covariates
from .step2 import Step2Config, fit_beta, fit_intercept_b, step2_objective


@dataclass(frozen=True, eq=False)
class StaticFit:
    beta_hat: np.ndarray
    b_hat: np.ndarray

    def mean(self, cov: Covariates):
        return cov.x @ self.beta_hat + self.b_hat


def _fit_matrix(mat, cov, cfg) -> StaticFit:
    return StaticFit(fit_beta(mat, cov, cfg), fit_intercept_b(mat, cov, cfg)[0])


def svt_sep(wp: WeightedPanel, cov: Covariates, cfg: Step2Config) -> list[StaticFit]:
    return [_fit_matrix(z, cov, cfg) for z in wp.z]


def svt_avg(wp: WeightedPanel, cov: Covariates, cfg: Step2Config, sep=None) -> StaticFit:
    sep = svt_sep(wp, cov, cfg) if sep is None else sep
    return StaticFit(
        np.mean([f.beta_hat for f in sep], axis=0),
        np.mean([f.b_hat for f in sep], axis=0),
    )


def svt_sum(wp: WeightedPanel, cov: Covariates, cfg: Step2Config) -> StaticFit:
    return _fit_matrix(wp.zbar, cov, cfg)


def pooled_objective(wp: WeightedPanel, cov: Covariates, fit: StaticFit, cfg: Step2Config) -> float:
    """T^-1 sum_t ||Z_t - X beta - B||_F^2 plus the second-step penalties."""
    loss = np.mean(np.sum((wp.z - fit.mean(cov)) ** 2, axis=(1, 2)))
    # the fit term vanishes when the target is the fit itself, leaving the penalties
    penalties = step2_objective(fit.mean(cov), cov, fit.beta_hat, fit.b_hat, cfg)
    return float(loss + penalties)
