"""Independent reference computations used as test oracles.

Everything here is written from the model definitions with plain loops or
generic dense linear algebra and deliberately avoids the package internals.
"""
import numpy as np


def ipw(y, r, p):
    return r * y / p[None, :, None]


def naive_objective(y, r, p, w1, w2, lam, gam, nu1=0.0, nu2=0.0):
    """Corrected profile objective by explicit loops over (i, j, t).

    Uses Z (Y - Z) with the full responses, not the Z^2 (p - 1) shortcut.
    """
    T, n1, n2 = y.shape
    z = ipw(y, r, p)
    zbar = z.mean(axis=0)
    zlag = z[:-1].mean(axis=0)
    shrink = 1.0 - 1.0 / T
    total = 0.0
    for t in range(1, T):
        for i in range(n1):
            for j in range(n2):
                row = sum(w1[i, k] * (z[t - 1, k, j] - zlag[k, j]) for k in range(n1))
                col = sum((z[t - 1, i, k] - zlag[i, k]) * w2[k, j] for k in range(n2))
                d = z[t, i, j] - zbar[i, j] - lam[i] * row - col * gam[j]
                total += d * d
                total += lam[i] ** 2 * shrink * sum(
                    w1[i, k] ** 2 * z[t - 1, k, j] * (y[t - 1, k, j] - z[t - 1, k, j]) for k in range(n1)
                )
                total += gam[j] ** 2 * shrink * sum(
                    w2[k, j] ** 2 * z[t - 1, i, k] * (y[t - 1, i, k] - z[t - 1, i, k]) for k in range(n2)
                )
                total += shrink * z[t, i, j] * (y[t, i, j] - z[t, i, j])
    return total + nu1 * np.sum(lam**2) + nu2 * np.sum(gam**2)


def dense_joint_solve(y, w1, w2, nu1=0.0, nu2=0.0):
    """Full-observation ridge fit of (lam, gam) through an explicit design matrix."""
    T, n1, n2 = y.shape
    zc = y[1:] - y.mean(axis=0)
    zl = y[:-1] - y[:-1].mean(axis=0)
    rows, target = [], []
    for t in range(T - 1):
        wl = w1 @ zl[t]
        lw = zl[t] @ w2
        for i in range(n1):
            for j in range(n2):
                x = np.zeros(n1 + n2)
                x[i] = wl[i, j]
                x[n1 + j] = lw[i, j]
                rows.append(x)
                target.append(zc[t, i, j])
    d = np.array(rows)
    pen = np.diag(np.r_[np.full(n1, nu1), np.full(n2, nu2)])
    theta = np.linalg.solve(d.T @ d + pen, d.T @ np.array(target))
    return theta[:n1], theta[n1:]


def fd_hessian(f, theta, h=1e-4):
    """Central-difference Hessian of a scalar function."""
    m = theta.size
    out = np.zeros((m, m))
    eye = np.eye(m) * h
    for a in range(m):
        for b in range(a, m):
            v = (
                f(theta + eye[a] + eye[b])
                - f(theta + eye[a] - eye[b])
                - f(theta - eye[a] + eye[b])
                + f(theta - eye[a] - eye[b])
            ) / (4 * h * h)
            out[a, b] = out[b, a] = v
    return out


def parabola_argmin(f):
    """Minimizer of a one-dimensional quadratic from three evaluations."""
    fm, f0, fp = f(-1.0), f(0.0), f(1.0)
    a = (fp + fm - 2 * f0) / 2
    b = (fp - fm) / 2
    return -b / (2 * a)


def naive_first_bias(lam, gam, y, r, p, w1, w2):
    """First-round raw bias vector by four nested loops."""
    T, n1, n2 = y.shape
    m = n1 + n2
    z = ipw(y, r, p)
    bl = np.zeros(n1)
    for i in range(n1):
        s = 0.0
        for j in range(n2):
            for k in range(n1):
                for t in range(T):
                    s += w1[i, k] ** 2 * z[t, k, j] ** 2 * (p[k] - 1) / T
        bl[i] = 2.0 / (m * T) * lam[i] * s
    bg = np.zeros(n2)
    for j in range(n2):
        s = 0.0
        for i in range(n1):
            for k in range(n2):
                for t in range(T):
                    s += w2[k, j] ** 2 * z[t, i, k] ** 2 * (p[i] - 1) / T
        bg[j] = 2.0 / (m * T) * gam[j] * s
    return np.r_[bl, bg]


def nuclear_prox_subgradient(mat, c, iters=10_000):
    """argmin_B ||M - B||_F^2 + 2c ||B||_* by subgradient steps 1/(2k).

    The objective is 2-strongly convex, which makes these steps converge.
    """
    b = mat.copy()
    for k in range(1, iters + 1):
        u, s, vt = np.linalg.svd(b, full_matrices=False)
        keep = s > 1e-12
        g = 2 * (b - mat) + 2 * c * (u[:, keep] @ vt[keep])
        b = b - g / (2 * k)
    return b


def truncated_powerlaw_ccdf(n, exponent):
    """P(H >= h) for h = 1..n-1 by direct summation."""
    h = np.arange(1, n, dtype=float)
    w = h**-exponent
    pmf = w / w.sum()
    return h, pmf[::-1].cumsum()[::-1]


def random_networks(n1, n2, rng, density=0.5):
    a1 = (rng.random((n1, n1)) < density).astype(float)
    a2 = (rng.random((n2, n2)) < density).astype(float)
    np.fill_diagonal(a1, 0)
    np.fill_diagonal(a2, 0)
    # make sure every row of a1 and column of a2 has a neighbour
    for i in range(n1):
        if a1[i].sum() == 0:
            a1[i, (i + 1) % n1] = 1
    for j in range(n2):
        if a2[:, j].sum() == 0:
            a2[(j + 1) % n2, j] = 1
    return a1, a2
