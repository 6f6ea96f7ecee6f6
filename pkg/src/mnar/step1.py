"""First-step estimation of the network effects (lam, gam).

The corrected profile objective is quadratic in theta = (lam, gam) and
separable in lam_i given gam (and in gam_j given lam), so each block has a
closed-form minimizer. All sums over time run over t = 2..T, pairing
``z_centered[t]`` with the lagged ``z_lag_centered[t - 1]``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, IllConditionedBlockError, NumericalError, ShapeError
from .missingness import WeightedPanel
from .model import NetworkPair

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Step1Config:
    nu1: float = 0.0
    nu2: float = 0.0
    tol: float = 1e-6
    max_iter: int = 100
    denominator_floor: float = 1e-10

    def __post_init__(self):
        if self.nu1 < 0 or self.nu2 < 0:
            raise ConfigError("ridge penalties must be nonnegative")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be at least 1")


@dataclass(frozen=True, eq=False)
class Step1Problem:
    """Sufficient statistics of the quadratic objective.

    ``pp, pz, qq, qz, pq`` are the lag moments (see ``_kernels.lag_moments``),
    ``kappa`` / ``corr_gamma`` the nonpositive missingness corrections,
    ``sz2`` the sum of squared centered responses and ``c0`` the constant
    correction (1 - 1/T) sum Z (Y - Z).
    """

    pp: np.ndarray
    pz: np.ndarray
    qq: np.ndarray
    qz: np.ndarray
    pq: np.ndarray
    kappa: np.ndarray
    corr_gamma: np.ndarray
    sz2: float
    c0: float
    horizon: int

    @property
    def n1(self) -> int:
        return self.pp.shape[0]

    @property
    def n2(self) -> int:
        return self.qq.shape[0]

    @property
    def m(self) -> int:
        return self.n1 + self.n2

    def lambda_denominators(self, cfg: Step1Config):
        return self.pp + self.kappa + cfg.nu1

    def gamma_denominators(self, cfg: Step1Config):
        return self.qq + self.corr_gamma + cfg.nu2

    def value(self, lam, gam, cfg: Step1Config) -> float:
        """Objective from the moments; agrees with :func:`profile_objective`."""
        quad = (
            self.sz2
            - 2 * lam @ self.pz
            - 2 * gam @ self.qz
            + lam**2 @ self.pp
            + gam**2 @ self.qq
            + 2 * lam @ self.pq @ gam
        )
        corr = lam**2 @ self.kappa + gam**2 @ self.corr_gamma + self.c0
        return float(quad + corr + cfg.nu1 * lam @ lam + cfg.nu2 * gam @ gam)


def _check(wp: WeightedPanel, nets: NetworkPair):
    if wp.horizon < 2:
        raise ShapeError("the first step needs T >= 2 (the lag is undefined otherwise)")
    if (nets.n1, nets.n2) != (wp.n1, wp.n2):
        raise ShapeError(f"networks {(nets.n1, nets.n2)} do not match panel {(wp.n1, wp.n2)}")


def correction_scalars(wp: WeightedPanel, nets: NetworkPair):
    """(kappa, corr_gamma) built from Z^2 (p - 1) at the lagged periods."""
    T = wp.horizon
    lagged = wp.ipw_excess[:-1].sum(axis=0)
    shrink = 1.0 - 1.0 / T
    kappa = shrink * (nets.w1_sq @ lagged).sum(axis=1)
    corr_gamma = shrink * (lagged @ nets.w2_sq).sum(axis=0)
    return kappa, corr_gamma


def build_problem(wp: WeightedPanel, nets: NetworkPair) -> Step1Problem:
    _check(wp, nets)
    zc = wp.z_centered[1:]
    pp, pz, qq, qz, pq = _kernels.lag_moments(
        zc, wp.z_lag_centered, nets.w1, nets.w2, nets.w1_rows, nets.w2_cols
    )
    kappa, corr_gamma = correction_scalars(wp, nets)
    T = wp.horizon
    c0 = (1.0 - 1.0 / T) * float(wp.ipw_excess[1:].sum())
    return Step1Problem(pp, pz, qq, qz, pq, kappa, corr_gamma, float(np.sum(zc**2)), c0, T)


def profile_objective(wp: WeightedPanel, nets: NetworkPair, lam, gam, cfg: Step1Config) -> float:
    """Corrected, penalized profile least squares evaluated from the residuals.

    This path forms the residual matrices explicitly and does not go through
    the moment statistics, so it doubles as a check on :class:`Step1Problem`.
    """
    _check(wp, nets)
    lam = np.asarray(lam, dtype=float)
    gam = np.asarray(gam, dtype=float)
    T = wp.horizon
    zl = wp.z_lag_centered
    resid = wp.z_centered[1:] - lam[:, None] * (nets.w1 @ zl) - (zl @ nets.w2) * gam
    kappa, corr_gamma = correction_scalars(wp, nets)
    c0 = (1.0 - 1.0 / T) * wp.ipw_excess[1:].sum()
    total = np.sum(resid**2) + lam**2 @ kappa + gam**2 @ corr_gamma + c0
    return float(total + cfg.nu1 * lam @ lam + cfg.nu2 * gam @ gam)


def update_lambda_block(prob: Step1Problem, gam, cfg: Step1Config):
    """Exact minimizer over lam given gam."""
    den = prob.lambda_denominators(cfg)
    bad = np.flatnonzero(den <= cfg.denominator_floor)
    if bad.size:
        raise IllConditionedBlockError("lambda", bad[0], den[bad[0]])
    return (prob.pz - prob.pq @ gam) / den


def update_gamma_block(prob: Step1Problem, lam, cfg: Step1Config):
    """Exact minimizer over gam given lam."""
    den = prob.gamma_denominators(cfg)
    bad = np.flatnonzero(den <= cfg.denominator_floor)
    if bad.size:
        raise IllConditionedBlockError("gamma", bad[0], den[bad[0]])
    return (prob.qz - lam @ prob.pq) / den


@dataclass(frozen=True, eq=False)
class Step1Fit:
    lambda_hat: np.ndarray
    gamma_hat: np.ndarray
    kappa: np.ndarray
    corr_gamma: np.ndarray
    objective_trace: tuple
    iterations: int
    converged: bool
    config: Step1Config = field(default_factory=Step1Config)
    problem: Step1Problem | None = field(default=None, repr=False)

    @property
    def theta(self):
        return np.r_[self.lambda_hat, self.gamma_hat]


_RUNAWAY = 1e6  # stationarity needs |effects| < 1; far past that the sweeps are diverging


def _unbounded_message(prob, cfg) -> str:
    low = float(np.linalg.eigvalsh(hessian_sigma2(prob, cfg))[0])
    return (f"the corrected objective is unbounded below (smallest Hessian eigenvalue {low:.3g}); "
            "increase nu1/nu2 or use a longer panel")


def fit_step1(wp: WeightedPanel, nets: NetworkPair, cfg: Step1Config | None = None,
              problem: Step1Problem | None = None) -> Step1Fit:
    """Alternate the two block updates from lam = gam = 0.

    The objective is recorded after every full sweep and must never go up;
    a rise beyond rounding is an internal error.
    """
    cfg = cfg or Step1Config()
    prob = problem if problem is not None else build_problem(wp, nets)
    lam = np.zeros(prob.n1)
    gam = np.zeros(prob.n2)
    trace = [prob.value(lam, gam, cfg)]
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        new_lam = update_lambda_block(prob, gam, cfg)
        new_gam = update_gamma_block(prob, new_lam, cfg)
        step = max(np.abs(new_lam - lam).max(initial=0.0), np.abs(new_gam - gam).max(initial=0.0))
        lam, gam = new_lam, new_gam
        if max(np.abs(lam).max(initial=0.0), np.abs(gam).max(initial=0.0)) > _RUNAWAY:
            raise NumericalError(_unbounded_message(prob, cfg))
        trace.append(prob.value(lam, gam, cfg))
        slack = 1e-9 * max(1.0, abs(trace[-2]))
        if trace[-1] > trace[-2] + slack:
            raise AssertionError(f"objective rose from {trace[-2]!r} to {trace[-1]!r} in sweep {it}")
        if step < cfg.tol:
            converged = True
            break
    if not converged:
        # block denominators can all be positive while the joint quadratic is
        # indefinite; then the sweeps run off towards minus infinity
        if np.linalg.eigvalsh(hessian_sigma2(prob, cfg))[0] <= 0:
            raise NumericalError(_unbounded_message(prob, cfg))
        log.warning("step 1 stopped after %d sweeps without meeting tol=%g", it, cfg.tol)
    return Step1Fit(lam, gam, prob.kappa, prob.corr_gamma, tuple(trace), it, converged, cfg, prob)


def hessian_sigma2(prob: Step1Problem, cfg: Step1Config):
    """(mT)^-1 times the exact Hessian of the objective in (lam, gam)."""
    n1, m, T = prob.n1, prob.m, prob.horizon
    h = np.zeros((m, m))
    idx1 = np.arange(n1)
    idx2 = n1 + np.arange(prob.n2)
    h[idx1, idx1] = 2 * prob.lambda_denominators(cfg)
    h[idx2, idx2] = 2 * prob.gamma_denominators(cfg)
    h[:n1, n1:] = 2 * prob.pq
    h[n1:, :n1] = 2 * prob.pq.T
    return h / (m * T)
