"""CSV and JSON formats for panels, networks, covariates and fitted parameters.

Floats are written with ``repr``, the shortest decimal that reads back to
the same double, so every file round-trips exactly.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .model import Covariates, ModelParams, NetworkPair, PanelSeries, normalize_networks

PANEL_FILE = "panel.csv"
ROW_NET_FILE = "row_network.csv"
COL_NET_FILE = "col_network.csv"
COV_FILE = "covariates.csv"
TRUTH_FILE = "truth.json"
TRUTH_PANEL_FILE = "truth_panel.csv"
FIT_FILE = "fit.json"


def fnum(x) -> str:
    return repr(float(x))


def _open_write(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8")


def _rows(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None:
            raise ShapeError(f"{path}: empty file")
        return header, [r for r in rd if r]


def write_panel(path, panel: PanelSeries):
    """Long format ``t,i,j,observed,value``; unobserved values are left blank."""
    T, n1, n2 = panel.shape
    t, i, j = np.indices(panel.shape).reshape(3, -1)
    obs = panel.mask.ravel()
    val = panel.responses.ravel()
    with _open_write(path) as fh:
        fh.write("t,i,j,observed,value\n")
        fh.writelines(
            f"{a},{b},{c},{o},{fnum(v) if o else ''}\n" for a, b, c, o, v in zip(t, i, j, obs, val)
        )


def read_panel(path) -> PanelSeries:
    header, rows = _rows(path)
    if header[:5] != ["t", "i", "j", "observed", "value"]:
        raise ShapeError(f"{path}: expected header t,i,j,observed,value, got {header}")
    if not rows:
        raise ShapeError(f"{path}: no data rows")
    idx = np.array([[int(r[0]), int(r[1]), int(r[2])] for r in rows])
    if idx.min() < 0:
        raise ShapeError(f"{path}: negative index")
    shape = tuple(idx.max(axis=0) + 1)
    y = np.zeros(shape)
    mask = np.zeros(shape, dtype=np.int8)
    seen = np.zeros(shape, dtype=bool)
    for (t, i, j), r in zip(idx, rows):
        seen[t, i, j] = True
        if int(r[3]):
            if r[4] == "":
                raise ShapeError(f"{path}: observed entry ({t},{i},{j}) has no value")
            mask[t, i, j] = 1
            y[t, i, j] = float(r[4])
    if not seen.all():
        raise ShapeError(f"{path}: the panel does not list every (t, i, j) cell")
    return PanelSeries(y, mask)


def write_values(path, stack, mask=None):
    """``t,i,j,value`` for every entry (``observed`` column added when a mask is given)."""
    stack = np.asarray(stack, dtype=float)
    t, i, j = np.indices(stack.shape).reshape(3, -1)
    val = stack.ravel()
    with _open_write(path) as fh:
        if mask is None:
            fh.write("t,i,j,value\n")
            fh.writelines(f"{a},{b},{c},{fnum(v)}\n" for a, b, c, v in zip(t, i, j, val))
        else:
            obs = np.asarray(mask).ravel()
            fh.write("t,i,j,observed,value\n")
            fh.writelines(f"{a},{b},{c},{o},{fnum(v)}\n" for a, b, c, o, v in zip(t, i, j, obs, val))


def read_values(path):
    header, rows = _rows(path)
    col = header.index("value")
    idx = np.array([[int(r[0]), int(r[1]), int(r[2])] for r in rows])
    out = np.zeros(tuple(idx.max(axis=0) + 1))
    for (t, i, j), r in zip(idx, rows):
        out[t, i, j] = float(r[col])
    return out


def write_edges(path, a):
    src, dst = np.nonzero(np.asarray(a))
    with _open_write(path) as fh:
        fh.write("src,dst\n")
        fh.writelines(f"{s},{d}\n" for s, d in zip(src, dst))


def read_edges(path, n) -> np.ndarray:
    header, rows = _rows(path)
    if header[:2] != ["src", "dst"]:
        raise ShapeError(f"{path}: expected header src,dst, got {header}")
    a = np.zeros((n, n))
    for r in rows:
        s, d = int(r[0]), int(r[1])
        if not (0 <= s < n and 0 <= d < n):
            raise ShapeError(f"{path}: edge ({s},{d}) outside 0..{n - 1}")
        a[s, d] = 1.0
    return a


def write_matrix(path, m, prefix="c"):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    with _open_write(path) as fh:
        fh.write(",".join(f"{prefix}{k}" for k in range(m.shape[1])) + "\n")
        fh.writelines(",".join(fnum(v) for v in row) + "\n" for row in m)


def read_matrix(path) -> np.ndarray:
    _, rows = _rows(path)
    return np.array([[float(v) for v in r] for r in rows])


def write_json(path, obj):
    with _open_write(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{path}: no such file")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_dataset(out, panel: PanelSeries, nets: NetworkPair, cov: Covariates):
    out = Path(out)
    write_panel(out / PANEL_FILE, panel)
    write_edges(out / ROW_NET_FILE, nets.a1)
    write_edges(out / COL_NET_FILE, nets.a2)
    write_matrix(out / COV_FILE, cov.x, prefix="x")


def read_dataset(data):
    """``(panel, nets, cov)`` from a directory written by :func:`write_dataset`."""
    data = Path(data)
    panel = read_panel(data / PANEL_FILE)
    nets = normalize_networks(read_edges(data / ROW_NET_FILE, panel.n1), read_edges(data / COL_NET_FILE, panel.n2))
    cov = Covariates(read_matrix(data / COV_FILE))
    if cov.n1 != panel.n1:
        raise ShapeError(f"{data / COV_FILE}: {cov.n1} rows, panel has {panel.n1}")
    return panel, nets, cov


def write_dense(out, stack, name):
    """One ``{name}_t{t}.csv`` per period with N2 columns."""
    out = Path(out)
    for t, m in enumerate(np.asarray(stack)):
        write_matrix(out / f"{name}_t{t:04d}.csv", m)


def low_rank_factors(b, tol=1e-10):
    """(U s^1/2, V s^1/2) with B = U V' up to the numerical rank."""
    u, s, vt = np.linalg.svd(np.asarray(b, float), full_matrices=False)
    r = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
    root = np.sqrt(s[:r])
    return u[:, :r] * root, vt[:r].T * root


def params_to_json(p: ModelParams) -> dict:
    if p.b_factors is not None:
        u, v = p.b_factors
    else:
        u, v = low_rank_factors(p.intercept_b)
    return {
        "lambda": p.lam.tolist(),
        "gamma": p.gam.tolist(),
        "beta": p.beta.tolist(),
        "b_rank": int(p.rank_b),
        "b_u": np.asarray(u).tolist(),
        "b_v": np.asarray(v).tolist(),
    }


def params_from_json(d: dict, b=None) -> ModelParams:
    """Rebuild parameters; ``b`` (the dense sidecar) wins over the factors when given."""
    lam = np.asarray(d["lambda"], float)
    gam = np.asarray(d["gamma"], float)
    if b is None:
        u = np.asarray(d["b_u"], float).reshape(lam.size, -1)
        v = np.asarray(d["b_v"], float).reshape(gam.size, -1)
        b = u @ v.T
    return ModelParams(lam, gam, np.asarray(d["beta"], float), b, int(d.get("b_rank", 0)))
