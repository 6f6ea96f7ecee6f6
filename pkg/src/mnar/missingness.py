"""Observation-probability models and inverse-probability weighting."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import IllPosedWeightingError, ShapeError, SingularFitError
from .model import Covariates, PanelSeries

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-3


def mar_design(cov: Covariates) -> np.ndarray:
    """(1, X_i) with the constant columns of X dropped to keep it full rank."""
    x = cov.x
    keep = ~np.all(x == x[:1], axis=0)
    return np.column_stack([np.ones(cov.n1), x[:, keep]])


@dataclass(frozen=True, eq=False)
class MissingModel:
    alpha: np.ndarray | None
    probs: np.ndarray
    mechanism: str
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        if np.any(self.probs <= 0) or np.any(self.probs > 1):
            raise IllPosedWeightingError("observation probabilities must lie in (0, 1]")

    @classmethod
    def known(cls, probs, mechanism="KNOWN") -> "MissingModel":
        return cls(None, np.asarray(probs, dtype=float), mechanism)


def _loglik(eta, s, n):
    # sum_i s_i eta_i - n log(1 + exp(eta_i))
    return float(s @ eta - n * np.sum(np.logaddexp(0.0, eta)))


def fit_logistic_missing(mask, cov: Covariates, tol=1e-8, max_iter=100) -> MissingModel:
    """Maximum-likelihood logistic fit of P(R_ijt = 1) = expit((1, X_i)' alpha).

    The likelihood only depends on the row totals of the mask, so Newton
    steps work on an N1-row design. Each step is halved until the
    log-likelihood stops decreasing. Convergence is judged on the gradient of
    the per-draw average log-likelihood.
    """
    mask = np.asarray(mask)
    if mask.ndim != 3 or mask.shape[1] != cov.n1:
        raise ShapeError(f"mask shape {mask.shape} does not match {cov.n1} covariate rows")
    if mask.min() == mask.max():
        raise SingularFitError("mask must contain both observed and missing entries")
    d = mar_design(cov)
    s = mask.sum(axis=(0, 2)).astype(float)
    n = float(mask.shape[0] * mask.shape[2])

    total = n * cov.n1
    q = s.sum() / total
    alpha = np.zeros(d.shape[1])
    alpha[0] = np.log(q) - np.log1p(-q)
    ll = _loglik(d @ alpha, s, n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        pr = expit(d @ alpha)
        grad = d.T @ (s - n * pr) / total
        if np.abs(grad).max() < tol:
            converged = True
            break
        hess = (d * (n * pr * (1 - pr))[:, None]).T @ d / total
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise SingularFitError("logistic Hessian is singular; covariates are collinear") from exc
        t = 1.0
        while True:
            cand = alpha + t * step
            new_ll = _loglik(d @ cand, s, n)
            if new_ll >= ll or t < 1e-10:
                break
            t *= 0.5
        stalled = abs(new_ll - ll) < 1e-12 * max(1.0, abs(ll))
        alpha, ll = cand, new_ll
        if np.linalg.norm(alpha) > 50 and stalled:
            raise SingularFitError("logistic fit diverges (perfect separation)")
    # a vanishing gradient at a huge alpha means the fit ran off to infinity
    if np.linalg.norm(alpha) > 50:
        raise SingularFitError("logistic fit diverges (perfect separation)")
    if not converged:
        pr = expit(d @ alpha)
        grad = d.T @ (s - n * pr) / total
        converged = np.abs(grad).max() < tol
        if not converged:
            log.warning("logistic fit stopped after %d iterations (|grad| = %.3g)", it, np.abs(grad).max())
    return MissingModel(alpha, expit(d @ alpha), "MAR", it, converged)


def estimate_uniform_rate(mask) -> MissingModel:
    """Every row gets the grand observation rate."""
    mask = np.asarray(mask)
    rate = float(mask.mean())
    if rate <= 0:
        raise IllPosedWeightingError("no observed entries")
    return MissingModel(None, np.full(mask.shape[1], rate), "UNI")


def fit_missing_model(panel: PanelSeries, cov: Covariates, mechanism: str) -> MissingModel:
    if mechanism == "MAR":
        return fit_logistic_missing(panel.mask, cov)
    if mechanism == "UNI":
        return estimate_uniform_rate(panel.mask)
    raise ValueError(f"unknown mechanism {mechanism!r}")


@dataclass(frozen=True, eq=False)
class WeightedPanel:
    """IPW matrices and their time-centered versions.

    ``z_centered[t]`` is Z_t - zbar for t = 1..T (index 0..T-1);
    ``z_lag_centered[s]`` is Z_s - zbar_lag for lags s = 1..T-1, so it pairs
    with ``z_centered[1:]``.
    """

    z: np.ndarray
    zbar: np.ndarray
    zbar_lag: np.ndarray
    z_centered: np.ndarray
    z_lag_centered: np.ndarray
    probs: np.ndarray
    ipw_excess: np.ndarray  # Z (Y - Z) = Z^2 (p - 1), zero off the mask

    @property
    def horizon(self) -> int:
        return self.z.shape[0]

    @property
    def n1(self) -> int:
        return self.z.shape[1]

    @property
    def n2(self) -> int:
        return self.z.shape[2]


def build_weighted_panel(panel: PanelSeries, mm: MissingModel, prob_floor=PROB_FLOOR) -> WeightedPanel:
    probs = np.asarray(mm.probs, dtype=float)
    if probs.shape != (panel.n1,):
        raise ShapeError(f"need {panel.n1} row probabilities, got {probs.shape}")
    if np.any(probs < prob_floor):
        bad = int(np.argmin(probs))
        raise IllPosedWeightingError(
            f"row {bad} has observation probability {probs[bad]:.3g} < floor {prob_floor}"
        )
    z = panel.mask * panel.responses / probs[None, :, None]
    zbar = z.mean(axis=0)
    # a single period has no lag; the step-1 estimator rejects it
    zbar_lag = z[:-1].mean(axis=0) if panel.horizon > 1 else np.zeros_like(zbar)
    excess = z**2 * (probs[None, :, None] - 1.0)
    return WeightedPanel(
        z=z,
        zbar=zbar,
        zbar_lag=zbar_lag,
        z_centered=z - zbar,
        z_lag_centered=z[:-1] - zbar_lag,
        probs=probs,
        ipw_excess=excess,
    )
