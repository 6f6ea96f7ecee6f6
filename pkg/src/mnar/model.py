"""Domain types, network normalization and the one-step conditional mean.

The model for an N1 x N2 matrix series is

    Y_t = diag(lam) W1 Y_{t-1} + Y_{t-1} W2 diag(gam) + X beta + B + E_t

with W1 row-normalized (row network) and W2 column-normalized (column
network).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import ShapeError

log = logging.getLogger(__name__)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PanelSeries:
    """T response matrices with their 0/1 observation masks.

    Unobserved responses are stored as 0 and :meth:`value` refuses to read
    them. Bulk arrays are exposed for the estimators, which only ever touch
    ``mask * responses``.
    """

    responses: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.responses, dtype=float)
        r = np.asarray(self.mask)
        if y.ndim != 3:
            raise ShapeError(f"responses must have shape (T, N1, N2), got {y.shape}")
        if r.shape != y.shape:
            raise ShapeError(f"mask shape {r.shape} != responses shape {y.shape}")
        if not np.isin(r, (0, 1)).all():
            raise ShapeError("mask entries must be exactly 0 or 1")
        r = r.astype(np.int8)
        if not np.isfinite(y[r == 1]).all():
            raise ShapeError("observed responses must be finite")
        object.__setattr__(self, "mask", _frozen(r, np.int8))
        object.__setattr__(self, "responses", _frozen(np.where(r == 1, y, 0.0)))

    @property
    def horizon(self) -> int:
        return self.responses.shape[0]

    @property
    def n1(self) -> int:
        return self.responses.shape[1]

    @property
    def n2(self) -> int:
        return self.responses.shape[2]

    @property
    def shape(self):
        return self.responses.shape

    def value(self, t, i, j) -> float:
        if not self.mask[t, i, j]:
            raise KeyError(f"entry (t={t}, i={i}, j={j}) is unobserved")
        return float(self.responses[t, i, j])

    def observed_rate(self) -> float:
        return float(self.mask.mean())

    def with_mask(self, mask) -> "PanelSeries":
        """Copy with a sub-mask (entries may only be removed, never added)."""
        mask = np.asarray(mask)
        if np.any((mask == 1) & (self.mask == 0)):
            raise ShapeError("new mask reveals entries that were never observed")
        return PanelSeries(self.responses, mask)

    def permuted(self, row_perm=None, col_perm=None) -> "PanelSeries":
        y, r = self.responses, self.mask
        if row_perm is not None:
            y, r = y[:, row_perm], r[:, row_perm]
        if col_perm is not None:
            y, r = y[:, :, col_perm], r[:, :, col_perm]
        return PanelSeries(y, r)


@dataclass(frozen=True, eq=False)
class NetworkPair:
    """Row adjacency ``a1`` and column adjacency ``a2`` with their weights.

    Build through :func:`normalize_networks`.
    """

    a1: np.ndarray
    a2: np.ndarray
    w1: np.ndarray
    w2: np.ndarray

    @property
    def n1(self) -> int:
        return self.a1.shape[0]

    @property
    def n2(self) -> int:
        return self.a2.shape[0]

    @cached_property
    def w1_rows(self):
        return _kernels.row_lists(self.w1)

    @cached_property
    def w2_cols(self):
        return _kernels.col_lists(self.w2)

    @cached_property
    def w1_sq(self):
        return self.w1**2

    @cached_property
    def w2_sq(self):
        return self.w2**2

    def row_lag(self, stack):
        return _kernels.row_lag(stack, self.w1, self.w1_rows)

    def col_lag(self, stack):
        return _kernels.col_lag(stack, self.w2, self.w2_cols)

    def permuted(self, row_perm=None, col_perm=None) -> "NetworkPair":
        a1, a2 = self.a1, self.a2
        if row_perm is not None:
            a1 = a1[np.ix_(row_perm, row_perm)]
        if col_perm is not None:
            a2 = a2[np.ix_(col_perm, col_perm)]
        return normalize_networks(a1, a2)


@dataclass(frozen=True, eq=False)
class Covariates:
    """Row covariates X (N1 x p); the first column is all ones by convention."""

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2 or x.shape[1] < 1:
            raise ShapeError(f"covariates must be (N1, p) with p >= 1, got {x.shape}")
        if not np.isfinite(x).all():
            raise ShapeError("covariates must be finite")
        object.__setattr__(self, "x", _frozen(x))

    @property
    def n1(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @cached_property
    def _q(self):
        q, _ = np.linalg.qr(self.x)
        return q

    def project(self, m):
        """P_X m."""
        return self._q @ (self._q.T @ m)

    def project_out(self, m):
        """P_X^perp m = m - P_X m."""
        return m - self.project(m)

    def permuted(self, row_perm) -> "Covariates":
        return Covariates(self.x[row_perm])


@dataclass(frozen=True, eq=False)
class ModelParams:
    lam: np.ndarray
    gam: np.ndarray
    beta: np.ndarray
    intercept_b: np.ndarray
    rank_b: int = 0
    b_factors: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("lam", "gam", "beta", "intercept_b"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.lam.ndim != 1 or self.gam.ndim != 1:
            raise ShapeError("lam and gam must be vectors")
        n1, n2 = self.intercept_b.shape
        if self.lam.shape[0] != n1 or self.gam.shape[0] != n2:
            raise ShapeError(
                f"lam/gam lengths ({self.lam.shape[0]}, {self.gam.shape[0]}) "
                f"do not match intercept shape {(n1, n2)}"
            )
        if self.beta.ndim != 2 or self.beta.shape[1] != n2:
            raise ShapeError(f"beta must be (p, {n2}), got {self.beta.shape}")

    @property
    def n1(self) -> int:
        return self.lam.shape[0]

    @property
    def n2(self) -> int:
        return self.gam.shape[0]

    def static_mean(self, cov: Covariates):
        """X beta + B."""
        return cov.x @ self.beta + self.intercept_b

    def identification_gap(self, cov: Covariates) -> float:
        """max |X^T B|; zero when B is orthogonal to the covariates."""
        return float(np.abs(cov.x.T @ self.intercept_b).max())


def normalize_networks(a1, a2) -> NetworkPair:
    """Row-normalize ``a1`` and column-normalize ``a2``.

    Rows of ``a1`` (columns of ``a2``) with zero degree stay all zero.
    """
    mats = []
    for name, a in (("a1", a1), ("a2", a2)):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"{name} must be square, got shape {a.shape}")
        if np.any(np.diag(a) != 0):
            raise ShapeError(f"{name} must have a zero diagonal")
        if not np.isin(a, (0.0, 1.0)).all():
            raise ShapeError(f"{name} must be binary")
        mats.append(a)
    a1, a2 = mats
    d1 = a1.sum(axis=1, keepdims=True)
    d2 = a2.sum(axis=0, keepdims=True)
    w1 = np.divide(a1, d1, out=np.zeros_like(a1), where=d1 > 0)
    w2 = np.divide(a2, d2, out=np.zeros_like(a2), where=d2 > 0)
    return NetworkPair(_frozen(a1), _frozen(a2), _frozen(w1), _frozen(w2))


def network_term(prev, lam, gam, nets: NetworkPair):
    """diag(lam) W1 prev + prev W2 diag(gam); ``prev`` may be a (T, N1, N2) stack."""
    prev = np.asarray(prev, dtype=float)
    return lam[:, None] * nets.row_lag(prev) + nets.col_lag(prev) * gam


def _check_shapes(prev, params: ModelParams, nets: NetworkPair, cov: Covariates):
    n1, n2 = params.n1, params.n2
    if prev.shape[-2:] != (n1, n2):
        raise ShapeError(f"state shape {prev.shape} does not match params {(n1, n2)}")
    if nets.n1 != n1 or nets.n2 != n2:
        raise ShapeError(f"networks {(nets.n1, nets.n2)} do not match params {(n1, n2)}")
    if cov.n1 != n1 or cov.p != params.beta.shape[0]:
        raise ShapeError(f"covariates {cov.x.shape} do not match beta {params.beta.shape}")


def conditional_mean(prev, params: ModelParams, nets: NetworkPair, cov: Covariates):
    """E(Y_t | Y_{t-1} = prev)."""
    prev = np.asarray(prev, dtype=float)
    _check_shapes(prev, params, nets, cov)
    return network_term(prev, params.lam, params.gam, nets) + params.static_mean(cov)


@dataclass(frozen=True)
class StationarityReport:
    kappa1: float
    kappa2: float
    kappa_sum: float
    stationary: bool
    spectral_radius: float
    power_iterations: int


def network_spectral_radius(lam, gam, nets: NetworkPair, max_iter=200, tol=1e-8, seed=0):
    """Spectral radius of Y -> diag(lam) W1 Y + Y W2 diag(gam) by power iteration.

    The N1*N2 square companion matrix is never formed.
    """
    lam = np.asarray(lam, dtype=float)
    gam = np.asarray(gam, dtype=float)
    rng = np.random.default_rng(seed)
    y = rng.random((nets.n1, nets.n2)) + 0.5
    y /= np.linalg.norm(y)
    rho = 0.0
    for it in range(1, max_iter + 1):
        ly = network_term(y, lam, gam, nets)
        norm = np.linalg.norm(ly)
        if norm == 0.0:
            return 0.0, it
        new_rho = norm
        y = ly / norm
        if abs(new_rho - rho) < tol * max(1.0, new_rho):
            return float(new_rho), it
        rho = new_rho
    return float(rho), max_iter


def check_stationarity(params: ModelParams, nets: NetworkPair | None = None) -> StationarityReport:
    k1 = float(np.abs(params.lam).max(initial=0.0))
    k2 = float(np.abs(params.gam).max(initial=0.0))
    if nets is None:
        rho, its = float("nan"), 0
    else:
        rho, its = network_spectral_radius(params.lam, params.gam, nets)
    return StationarityReport(k1, k2, k1 + k2, k1 + k2 < 1.0, rho, its)
