"""Plug-in bias estimates for (lam, gam) and the multi-round correction."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import NumericalError
from .missingness import WeightedPanel
from .model import NetworkPair
from .step1 import Step1Fit, hessian_sigma2

log = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12


def default_rounds(horizon: int) -> int:
    """Short panels get two rounds, long ones a single round."""
    return 2 if horizon <= 30 else 1


@dataclass(frozen=True, eq=False)
class BiasState:
    round: int
    b_hat_raw: np.ndarray
    b_hat: np.ndarray
    theta: np.ndarray
    history: tuple = field(default=(), repr=False)  # earlier BiasStates
    condition_number: float = float("nan")

    def split(self, n1):
        return self.theta[:n1], self.theta[n1:]


class _Sigma2Solver:
    def __init__(self, sigma2):
        cond = float(np.linalg.cond(sigma2))
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise NumericalError(f"Hessian condition number {cond:.3g} exceeds {CONDITION_LIMIT:.0e}")
        self.cond = cond
        self._lu = lu_factor(sigma2)

    def __call__(self, rhs):
        return lu_solve(self._lu, rhs)


def _excess_row_col(wp: WeightedPanel, nets: NetworkPair):
    """Row sums of W1^2 Cbar and column sums of Cbar W2^2, Cbar = mean_t Z^2 (p - 1)."""
    cbar = wp.ipw_excess.mean(axis=0)
    return (nets.w1_sq @ cbar).sum(axis=1), (cbar @ nets.w2_sq).sum(axis=0)


def first_round_bias(fit: Step1Fit, wp: WeightedPanel, nets: NetworkPair):
    """Raw first-order bias vector (before the Hessian solve)."""
    prob = fit.problem
    m, T = prob.m, prob.horizon
    row, col = _excess_row_col(wp, nets)
    return 2.0 / (m * T) * np.r_[fit.lambda_hat * row, fit.gamma_hat * col]


def estimate_bias_round1(fit: Step1Fit, wp: WeightedPanel, nets: NetworkPair,
                         solver: _Sigma2Solver | None = None) -> BiasState:
    if not fit.converged:
        log.warning("debiasing an unconverged first-step fit")
    prob, cfg = fit.problem, fit.config
    m, T = prob.m, prob.horizon
    solver = solver or _Sigma2Solver(hessian_sigma2(prob, cfg))
    raw = first_round_bias(fit, wp, nets)
    ridge = 2.0 * np.r_[cfg.nu1 * fit.lambda_hat, cfg.nu2 * fit.gamma_hat]
    b1 = solver(raw - ridge / (m * T))
    return BiasState(1, raw, b1, fit.theta - b1, (), solver.cond)


def debias_rounds(fit: Step1Fit, wp: WeightedPanel, nets: NetworkPair, rounds: int | None = None) -> BiasState:
    """Round 1, then the higher-order recursion with alternating signs.

    The higher rounds scale the previous correction by
    (m T^2)^-1 sum_k W^2 sum_j sum_t Z^2 (p - 1), the same data sums as round 1.
    """
    prob = fit.problem
    rounds = default_rounds(prob.horizon) if rounds is None else int(rounds)
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    solver = _Sigma2Solver(hessian_sigma2(prob, fit.config))
    state = estimate_bias_round1(fit, wp, nets, solver)
    if rounds == 1:
        return state
    m, T, n1 = prob.m, prob.horizon, prob.n1
    row, col = _excess_row_col(wp, nets)
    # sum_t C = T * Cbar, so 1/(m T^2) sum_t becomes 1/(m T) on the mean
    scale = np.r_[row, col] / (m * T)
    history = [state]
    for r in range(2, rounds + 1):
        prev = state.b_hat
        raw = scale * prev
        b = (-1) ** (r + 1) * solver(raw)
        ratio = np.abs(b).max() / max(np.abs(prev).max(), np.finfo(float).tiny)
        if ratio >= 1:
            warnings.warn(f"bias correction round {r} is not contracting (ratio {ratio:.3g})", RuntimeWarning)
        state = BiasState(r, raw, b, state.theta - b, tuple(history), solver.cond)
        history.append(state)
    return state
