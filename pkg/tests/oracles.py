"""Reference computations used only by the tests.

Each one takes a different route from the production code: explicit
loops instead of vectorized sums, Jacobi rotations instead of the
Chebyshev recurrence, repeated boolean matrix products instead of BFS.
"""
import math

import numpy as np


def jacobi_eigh(a, tol=1e-14, max_sweeps=100):
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors as columns).
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = a[k, p], a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p, k], a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp, vkq = v[k, p], v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return np.diag(a).copy(), v


def cheb_scalar(x, theta):
    """sum_p theta_p T_p(x) / sum_p theta_p via the closed form cos(p arccos x) / cosh."""
    total = 0.0
    for p, th in enumerate(theta):
        if abs(x) <= 1:
            tp = math.cos(p * math.acos(x))
        else:
            tp = math.copysign(1.0, x) ** p * math.cosh(p * math.acosh(abs(x)))
        total += th * tp
    return total / sum(theta)


def normalized_laplacian_loops(e, eps=1e-6):
    n = e.shape[0]
    deg = [sum(e[i, j] for j in range(n)) for i in range(n)]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            lij = (deg[i] if i == j else 0.0) - e[i, j]
            out[i, j] = lij / math.sqrt(max(deg[i], eps) * max(deg[j], eps))
    return out


def spectral_filter_oracle(e, theta, lambda_max=1.5, eps=1e-6):
    """U g(scaled eigenvalues) U^T with U from Jacobi."""
    lhat = normalized_laplacian_loops(e, eps)
    lam, u = jacobi_eigh(lhat)
    scaled = 2.0 * lam / lambda_max - 1.0
    g = np.array([cheb_scalar(x, theta) for x in scaled])
    return (u * g) @ u.T


def edge_zeta_oracle(phi, g, i, j, double_count=True):
    """Explicit enumeration of both neighbor sums for pair (i, j)."""
    from magtrans.paths import influence, pair_features

    zeta = 0.0
    for k1 in range(g.n):
        if k1 != i:
            zeta = zeta + influence(phi, pair_features(g, i, k1))
    for k2 in range(g.n):
        if k2 != j:
            zeta = zeta + influence(phi, pair_features(g, k2, j))
    if not double_count:
        zeta = zeta - influence(phi, pair_features(g, i, j))
    return zeta


def node_agg_oracle(phi, g, i):
    from magtrans.paths import influence, pair_features

    out = np.zeros(phi.out_width)
    for j in range(g.n):
        if j != i:
            out = out + influence(phi, pair_features(g, i, j))
    return out


def khop_oracle(adj, k):
    """Reachability within k steps from boolean matrix powers."""
    n = adj.shape[0]
    a = adj.astype(np.int64)
    reach = np.eye(n, dtype=np.int64)
    within = np.zeros((n, n), dtype=bool)
    for _ in range(k):
        reach = np.minimum(reach @ a + reach, 1)
        within |= reach.astype(bool)
    np.fill_diagonal(within, False)
    return within


def exact_hop_oracle(adj, k):
    return khop_oracle(adj, k) & ~khop_oracle(adj, k - 1) if k > 1 else khop_oracle(adj, 1)


def central_diff(f, x, eps=1e-6):
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp, xm = x.copy(), x.copy()
        xp[idx] += eps
        xm[idx] -= eps
        g[idx] = (f(xp) - f(xm)) / (2 * eps)
    return g
