"""Second step: ridge coefficients and a soft-thresholded low-rank intercept."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError, SingularFitError
from .missingness import WeightedPanel
from .model import Covariates, NetworkPair, network_term


@dataclass(frozen=True)
class Step2Config:
    nu3: float = 1.0
    nu4: float = 1.0
    mix_alpha: float = 1.0

    def __post_init__(self):
        if self.nu3 < 0 or self.nu4 < 0:
            raise ConfigError("nu3 and nu4 must be nonnegative")
        if not 0 <= self.mix_alpha <= 1:
            raise ConfigError("mix_alpha must lie in [0, 1]")

    @property
    def threshold(self) -> float:
        return self.mix_alpha * self.nu4 / 2.0

    @property
    def frobenius_shrink(self) -> float:
        return 1.0 + (1.0 - self.mix_alpha) * self.nu4


@dataclass(frozen=True, eq=False)
class Step2Fit:
    beta_hat: np.ndarray
    b_hat: np.ndarray
    b_rank_hat: int
    singular_values: np.ndarray  # the kept ones, before shrinking
    residual_mean: np.ndarray


def residual_panel(wp: WeightedPanel, nets: NetworkPair, lam, gam):
    """Z_t - diag(lam) W1 Z_{t-1} - Z_{t-1} W2 diag(gam) for t = 2..T."""
    lam = np.asarray(lam, dtype=float)
    gam = np.asarray(gam, dtype=float)
    if lam.shape != (wp.n1,) or gam.shape != (wp.n2,):
        raise ShapeError(f"lam/gam shapes {lam.shape}, {gam.shape} do not match panel {(wp.n1, wp.n2)}")
    if wp.horizon < 2:
        raise ShapeError("residuals need T >= 2")
    return wp.z[1:] - network_term(wp.z[:-1], lam, gam, nets)


def _mean(residuals):
    r = np.asarray(residuals, dtype=float)
    return r.mean(axis=0) if r.ndim == 3 else r


def fit_beta(residuals, cov: Covariates, cfg: Step2Config):
    """(X'X + nu3 I)^-1 X' Ebar; ``residuals`` is a stack or an already averaged matrix."""
    ebar = _mean(residuals)
    if ebar.shape[0] != cov.n1:
        raise ShapeError(f"residual rows {ebar.shape[0]} != covariate rows {cov.n1}")
    gram = cov.x.T @ cov.x + cfg.nu3 * np.eye(cov.p)
    try:
        c = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularFitError("X'X + nu3 I is singular; use nu3 > 0") from exc
    rhs = cov.x.T @ ebar
    return np.linalg.solve(c.T, np.linalg.solve(c, rhs))


def soft_threshold_svd(mat, c):
    """U diag((s - c)_+) V'."""
    if c < 0:
        raise ValueError("threshold must be nonnegative")
    u, s, vt = np.linalg.svd(np.asarray(mat, dtype=float), full_matrices=False)
    return (u * np.maximum(s - c, 0.0)) @ vt


def fit_intercept_b(residuals, cov: Covariates, cfg: Step2Config):
    """Returns ``(b_hat, rank, kept_singular_values)``.

    Projecting out X before thresholding keeps X' B = 0 because the
    singular vectors of the projected matrix lie in the complement of X.
    """
    b1 = cov.project_out(_mean(residuals))
    u, s, vt = np.linalg.svd(b1, full_matrices=False)
    keep = s > cfg.threshold
    shrunk = (u[:, keep] * (s[keep] - cfg.threshold)) @ vt[keep]
    b = cov.project_out(shrunk / cfg.frobenius_shrink)
    return b, int(keep.sum()), s[keep]


def fit_step2_from_mean(ebar, cov: Covariates, cfg: Step2Config) -> Step2Fit:
    beta = fit_beta(ebar, cov, cfg)
    b, rank, sv = fit_intercept_b(ebar, cov, cfg)
    return Step2Fit(beta, b, rank, sv, ebar)


def fit_step2(wp: WeightedPanel, nets: NetworkPair, cov: Covariates, lam, gam, cfg: Step2Config) -> Step2Fit:
    return fit_step2_from_mean(residual_panel(wp, nets, lam, gam).mean(axis=0), cov, cfg)


def step2_objective(ebar, cov: Covariates, beta, b, cfg: Step2Config) -> float:
    """||Ebar - X beta - B||_F^2 + nu3 ||beta||^2 + nu4 (alpha ||B||_* + (1 - alpha) ||B||_F^2)."""
    fit = np.sum((ebar - cov.x @ beta - b) ** 2)
    nuc = np.linalg.svd(b, compute_uv=False).sum()
    pen_b = cfg.nu4 * (cfg.mix_alpha * nuc + (1 - cfg.mix_alpha) * np.sum(b**2))
    return float(fit + cfg.nu3 * np.sum(beta**2) + pen_b)
