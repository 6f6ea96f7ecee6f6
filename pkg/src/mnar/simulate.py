"""Synthetic networks, parameters and incomplete panels for Monte-Carlo work."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ConfigError, StationarityError
from .missingness import mar_design
from .model import (
    Covariates,
    ModelParams,
    NetworkPair,
    PanelSeries,
    check_stationarity,
    conditional_mean,
    normalize_networks,
)

MECHANISMS = ("MAR", "UNI")


@dataclass(frozen=True)
class SimConfig:
    n1: int = 100
    n2: int = 100
    horizon: int = 30
    powerlaw_exponent: float = 2.5
    p: int = 6
    beta_sparsity: float = 0.95
    beta_range: tuple = (-0.01, 0.01)
    b_rank: int = 10
    b_scale: float = 0.5
    lambda_val: float = 0.45
    gamma_val: float = 0.45
    noise_sd: float = 1.0
    mechanism: str = "MAR"
    alpha0: float = -1.3
    alpha_slope: float = 0.1
    uni_prob: float = 0.2
    seed: int = 0
    burn_in: int = 200

    def __post_init__(self):
        if self.powerlaw_exponent <= 1:
            raise ConfigError("power-law exponent must exceed 1")
        if not 0 < self.uni_prob <= 1:
            raise ConfigError("uni_prob must lie in (0, 1]")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be nonnegative")
        if abs(self.lambda_val) + abs(self.gamma_val) >= 1:
            raise ConfigError("|lambda_val| + |gamma_val| must be below 1")
        if self.mechanism not in MECHANISMS:
            raise ConfigError(f"mechanism must be one of {MECHANISMS}")
        if self.n1 < 2 or self.n2 < 2 or self.horizon < 1 or self.p < 1:
            raise ConfigError("need n1, n2 >= 2, horizon >= 1 and p >= 1")
        if not 0 <= self.beta_sparsity <= 1:
            raise ConfigError("beta_sparsity must lie in [0, 1]")
        object.__setattr__(self, "beta_range", tuple(self.beta_range))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta_range"] = list(self.beta_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class SimulatedData:
    """Everything one replication produces, truth included."""

    config: SimConfig
    panel: PanelSeries
    nets: NetworkPair
    cov: Covariates
    params: ModelParams
    truth: np.ndarray  # complete Y_1..Y_T
    y0: np.ndarray  # state preceding Y_1
    probs: np.ndarray  # true per-row observation probabilities

    def conditional_means(self):
        """A_t = E(Y_t | Y_{t-1}) for t = 1..T."""
        prev = np.concatenate([self.y0[None], self.truth[:-1]])
        return conditional_mean(prev, self.params, self.nets, self.cov)


def powerlaw_pmf(n, exponent):
    """P(h) proportional to h^-exponent on h = 1..n-1."""
    h = np.arange(1, n, dtype=float)
    w = h**-exponent
    return h.astype(int), w / w.sum()


def gen_powerlaw_network(n, exponent, rng) -> np.ndarray:
    """Binary adjacency whose column sums (in-degrees) are power-law draws.

    Node i draws its in-degree h from the truncated power law on 1..n-1 and
    then h distinct followers k != i, giving a[k, i] = 1.
    """
    if n < 2:
        raise ConfigError("a network needs at least two nodes")
    support, pmf = powerlaw_pmf(n, exponent)
    degrees = rng.choice(support, size=n, p=pmf)
    a = np.zeros((n, n))
    for i, h in enumerate(degrees):
        others = np.delete(np.arange(n), i)
        a[rng.choice(others, size=h, replace=False), i] = 1.0
    return a


def gen_covariates(n1, p, rng) -> Covariates:
    x = np.ones((n1, p))
    if p > 1:
        x[:, 1:] = rng.standard_normal((n1, p - 1))
    return Covariates(x)


def gen_parameters(cfg: SimConfig, cov: Covariates, rng) -> ModelParams:
    """Sparse beta, low-rank B orthogonal to X, constant network effects."""
    if cfg.b_rank >= min(cfg.n1, cfg.n2):
        raise ConfigError(f"b_rank={cfg.b_rank} must be below min(n1, n2)")
    p, n2 = cov.p, cfg.n2
    lo, hi = cfg.beta_range
    beta = rng.uniform(lo, hi, size=(p, n2))
    n_zero = int(round(cfg.beta_sparsity * beta.size))
    beta.flat[rng.permutation(beta.size)[:n_zero]] = 0.0
    u = rng.normal(0.0, cfg.b_scale, size=(cfg.n1, cfg.b_rank))
    v = rng.normal(0.0, cfg.b_scale, size=(n2, cfg.b_rank))
    u_perp = cov.project_out(u)
    b = u_perp @ v.T
    return ModelParams(
        lam=np.full(cfg.n1, cfg.lambda_val),
        gam=np.full(n2, cfg.gamma_val),
        beta=beta,
        intercept_b=b,
        rank_b=cfg.b_rank,
        b_factors=(u_perp, v),
    )


def true_probs(cfg: SimConfig, cov: Covariates) -> np.ndarray:
    if cfg.mechanism == "UNI":
        return np.full(cov.n1, cfg.uni_prob)
    d = mar_design(cov)
    alpha = np.r_[cfg.alpha0, np.full(d.shape[1] - 1, cfg.alpha_slope)]
    return 1.0 / (1.0 + np.exp(-(d @ alpha)))


def simulate_panel(cfg: SimConfig, nets: NetworkPair, params: ModelParams, cov: Covariates, rng):
    """Run the recursion with burn-in, then draw the masks.

    Returns ``(panel, truth, y0, probs)``.
    """
    report = check_stationarity(params)
    if not report.stationary:
        raise StationarityError(
            f"max|lam| + max|gam| = {report.kappa_sum:.4f} >= 1; the panel would not be stationary"
        )
    n1, n2, T = cfg.n1, cfg.n2, cfg.horizon
    y = np.zeros((n1, n2))
    for _ in range(cfg.burn_in):
        y = conditional_mean(y, params, nets, cov) + cfg.noise_sd * rng.standard_normal((n1, n2))
    y0 = y
    truth = np.empty((T, n1, n2))
    for t in range(T):
        y = conditional_mean(y, params, nets, cov) + cfg.noise_sd * rng.standard_normal((n1, n2))
        truth[t] = y
    probs = true_probs(cfg, cov)
    mask = (rng.random((T, n1, n2)) < probs[None, :, None]).astype(np.int8)
    return PanelSeries(truth, mask), truth, y0, probs


def simulate(cfg: SimConfig, rng=None) -> SimulatedData:
    """One full replication of the default design.

    The row network is stored transposed relative to
    :func:`gen_powerlaw_network`, so the power-law draw is the degree that
    row-normalizes W1, the same way it is for the column-normalized W2.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    a1 = gen_powerlaw_network(cfg.n1, cfg.powerlaw_exponent, rng).T
    a2 = gen_powerlaw_network(cfg.n2, cfg.powerlaw_exponent, rng)
    nets = normalize_networks(a1, a2)
    cov = gen_covariates(cfg.n1, cfg.p, rng)
    params = gen_parameters(cfg, cov, rng)
    panel, truth, y0, probs = simulate_panel(cfg, nets, params, cov, rng)
    return SimulatedData(cfg, panel, nets, cov, params, truth, y0, probs)
