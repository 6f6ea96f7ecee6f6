"""Rolling recovery of the conditional means and the error measures."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .model import Covariates, ModelParams, NetworkPair, network_term


def rolling_recover(params: ModelParams, z, nets: NetworkPair, cov: Covariates):
    """One-step-ahead means fed back into themselves.

    The first period uses the first IPW matrix as its own lag; afterwards
    each recovered matrix serves as the next lag.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 3:
        raise ShapeError("need a (T, N1, N2) stack of IPW matrices")
    static = params.static_mean(cov)
    out = np.empty_like(z)
    prev = z[0]
    for t in range(z.shape[0]):
        prev = network_term(prev, params.lam, params.gam, nets) + static
        out[t] = prev
    return out


def test_error(a_hat, truth, mask) -> float:
    """Relative squared error on the unobserved entries only."""
    a_hat, truth = np.asarray(a_hat, float), np.asarray(truth, float)
    hidden = 1 - np.asarray(mask)
    if a_hat.shape != truth.shape or hidden.shape != truth.shape:
        raise ShapeError("a_hat, truth and mask must share a shape")
    den = float(np.sum((hidden * truth) ** 2))
    if den == 0.0:
        raise ValueError("test error undefined: no unobserved entry with a nonzero value")
    return float(np.sum((hidden * (a_hat - truth)) ** 2) / den)


@dataclass
class MethodErrors:
    """Per-replication squared-error means for one method; reduced later."""

    lam: list = field(default_factory=list)
    gam: list = field(default_factory=list)
    beta: list = field(default_factory=list)
    b: list = field(default_factory=list)
    a: list = field(default_factory=list)
    test: list = field(default_factory=list)

    def add(self, lam=np.nan, gam=np.nan, beta=np.nan, b=np.nan, a=np.nan, test=np.nan):
        self.lam.append(lam)
        self.gam.append(gam)
        self.beta.append(beta)
        self.b.append(b)
        self.a.append(a)
        self.test.append(test)

    def report(self) -> "MetricReport":
        def root(v, scale=1.0):
            v = np.asarray(v, float)
            return float("nan") if np.all(np.isnan(v)) else float(scale * np.sqrt(np.nanmean(v)))

        tests = np.asarray(self.test, float)
        return MetricReport(
            rmse_lambda=root(self.lam),
            rmse_gamma=root(self.gam),
            rmse_beta=root(self.beta, 100.0),
            rmse_b=root(self.b),
            rmse_a=root(self.a),
            test_error=float("nan") if np.all(np.isnan(tests)) else float(np.nanmean(tests)),
            per_rep={k: list(getattr(self, k)) for k in ("lam", "gam", "beta", "b", "a", "test")},
        )


@dataclass(frozen=True)
class MetricReport:
    rmse_lambda: float
    rmse_gamma: float
    rmse_beta: float  # times 100
    rmse_b: float
    rmse_a: float
    test_error: float
    per_rep: dict = field(default_factory=dict, repr=False)

    ROWS = ("rmse_lambda", "rmse_gamma", "rmse_beta", "rmse_b", "rmse_a", "test_error")


def mse(est, truth) -> float:
    return float(np.mean((np.asarray(est, float) - np.asarray(truth, float)) ** 2))
