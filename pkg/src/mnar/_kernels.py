"""Hot loops over (t, i, j) with a numba path and a pure-numpy path.

The numba kernels walk the sparse neighbor lists of W1 (rows) and W2
(columns) instead of forming dense products, which is what makes large
panels affordable. The numpy path uses dense matmuls and is the reference.

Set ``MNAR_NUMBA=0`` in the environment to force the numpy path.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FLAG = os.environ.get("MNAR_NUMBA", "1").strip().lower()
USE_NUMBA = numba is not None and _FLAG not in {"0", "false", "off", "no"}


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def row_lists(w):
    """CSR triplet (indptr, indices, data) over the rows of ``w``."""
    w = np.asarray(w, dtype=float)
    rows, cols = np.nonzero(w)
    indptr = np.zeros(w.shape[0] + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    return np.cumsum(indptr), cols.astype(np.int64), w[rows, cols].copy()


def col_lists(w):
    """CSC triplet (indptr, indices, data) over the columns of ``w``."""
    return row_lists(np.asarray(w, dtype=float).T)


# ---------------------------------------------------------------------------
# numpy reference path
# ---------------------------------------------------------------------------

def _row_lag_numpy(stack, w1):
    return np.matmul(w1, stack)


def _col_lag_numpy(stack, w2):
    return np.matmul(stack, w2)


def _lag_moments_numpy(zc, zl, w1, w2):
    p = np.matmul(w1, zl)
    q = np.matmul(zl, w2)
    pp = np.einsum("tij,tij->i", p, p)
    pz = np.einsum("tij,tij->i", p, zc)
    qq = np.einsum("tij,tij->j", q, q)
    qz = np.einsum("tij,tij->j", q, zc)
    pq = np.einsum("tij,tij->ij", p, q)
    return pp, pz, qq, qz, pq


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if numba is not None:

    @numba.njit(cache=True)
    def _row_lag_nb(stack, indptr, indices, data):
        nt, n1, n2 = stack.shape
        out = np.zeros((nt, n1, n2))
        for t in range(nt):
            for i in range(n1):
                for a in range(indptr[i], indptr[i + 1]):
                    k = indices[a]
                    w = data[a]
                    for j in range(n2):
                        out[t, i, j] += w * stack[t, k, j]
        return out

    @numba.njit(cache=True)
    def _col_lag_nb(stack, indptr, indices, data):
        nt, n1, n2 = stack.shape
        out = np.zeros((nt, n1, n2))
        for t in range(nt):
            for j in range(n2):
                for a in range(indptr[j], indptr[j + 1]):
                    k = indices[a]
                    w = data[a]
                    for i in range(n1):
                        out[t, i, j] += stack[t, i, k] * w
        return out

    @numba.njit(cache=True)
    def _lag_moments_nb(zc, zl, r_ptr, r_idx, r_val, c_ptr, c_idx, c_val):
        nt, n1, n2 = zl.shape
        pp = np.zeros(n1)
        pz = np.zeros(n1)
        qq = np.zeros(n2)
        qz = np.zeros(n2)
        pq = np.zeros((n1, n2))
        for t in range(nt):
            for i in range(n1):
                for j in range(n2):
                    p = 0.0
                    for a in range(r_ptr[i], r_ptr[i + 1]):
                        p += r_val[a] * zl[t, r_idx[a], j]
                    q = 0.0
                    for a in range(c_ptr[j], c_ptr[j + 1]):
                        q += zl[t, i, c_idx[a]] * c_val[a]
                    z = zc[t, i, j]
                    pp[i] += p * p
                    pz[i] += p * z
                    qq[j] += q * q
                    qz[j] += q * z
                    pq[i, j] += p * q
        return pp, pz, qq, qz, pq


def _lag_moments_numba(zc, zl, w1, w2, rows=None, cols=None):
    zc = np.ascontiguousarray(zc, dtype=float)
    zl = np.ascontiguousarray(zl, dtype=float)
    rows = row_lists(w1) if rows is None else rows
    cols = col_lists(w2) if cols is None else cols
    return _lag_moments_nb(zc, zl, *rows, *cols)


def _row_lag_numba(stack, w1, rows=None):
    rows = row_lists(w1) if rows is None else rows
    return _row_lag_nb(np.ascontiguousarray(stack, dtype=float), *rows)


def _col_lag_numba(stack, w2, cols=None):
    cols = col_lists(w2) if cols is None else cols
    return _col_lag_nb(np.ascontiguousarray(stack, dtype=float), *cols)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def row_lag(stack, w1, rows=None):
    """``W1 @ stack[t]`` for every t (stack has shape (T, N1, N2)).

    ``rows`` optionally carries the cached ``row_lists(w1)`` triplet.
    """
    stack = np.asarray(stack, dtype=float)
    squeeze = stack.ndim == 2
    if squeeze:
        stack = stack[None]
    out = _row_lag_numba(stack, w1, rows) if USE_NUMBA else _row_lag_numpy(stack, w1)
    return out[0] if squeeze else out


def col_lag(stack, w2, cols=None):
    """``stack[t] @ W2`` for every t."""
    stack = np.asarray(stack, dtype=float)
    squeeze = stack.ndim == 2
    if squeeze:
        stack = stack[None]
    out = _col_lag_numba(stack, w2, cols) if USE_NUMBA else _col_lag_numpy(stack, w2)
    return out[0] if squeeze else out


def lag_moments(zc, zl, w1, w2, rows=None, cols=None):
    """Second moments of the network lags against the centered response.

    With ``P_t = W1 zl[t]`` and ``Q_t = zl[t] W2`` returns

    ``pp[i] = sum_{t,j} P^2``, ``pz[i] = sum_{t,j} P * zc``,
    ``qq[j] = sum_{t,i} Q^2``, ``qz[j] = sum_{t,i} Q * zc``,
    ``pq[i, j] = sum_t P * Q``.
    """
    if USE_NUMBA:
        return _lag_moments_numba(zc, zl, w1, w2, rows, cols)
    return _lag_moments_numpy(np.asarray(zc, float), np.asarray(zl, float), w1, w2)
