"""Independent brute-force references used by the test suite.

Each oracle works from first principles on small dense inputs and shares
no code with the package under test.
"""
import itertools
import math

import numpy as np


def dense_slices(slices):
    """List of dense (n, n) slice matrices rebuilt from the stored neighbour lists."""
    n = slices.n
    out = []
    for k in range(slices.K):
        A = np.zeros((n, n))
        for i in range(n):
            A[i, slices.cols[k, i]] = slices.vals[k, i]
        out.append(A)
    return out


def knn_slices_bruteforce(X, scale_rank=7, by="kernel"):
    """Kernel and (K, n) neighbour table via per-row Python sorting.

    ``by`` selects ranking by decreasing kernel value or increasing distance.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = len(X)
    dist = [[math.dist(X[i], X[j]) for j in range(n)] for i in range(n)]
    sigma = []
    for i in range(n):
        others = sorted(dist[i][j] for j in range(n) if j != i)
        sigma.append(others[scale_rank - 1])
    kern = [[math.exp(-dist[i][j] ** 2 / (sigma[i] * sigma[j])) for j in range(n)] for i in range(n)]
    order = []
    for i in range(n):
        if by == "kernel":
            nbrs = sorted((j for j in range(n) if j != i), key=lambda j: (-kern[i][j], j))
        else:
            nbrs = sorted((j for j in range(n) if j != i), key=lambda j: (dist[i][j], j))
        order.append(nbrs)
    return np.array(kern), np.array(order).T


def projector_residual(v, W):
    """``|v - P_W v|^2`` with the projection from least squares."""
    if W.shape[1] == 0:
        return float(v @ v)
    coef, *_ = np.linalg.lstsq(W, v, rcond=None)
    res = v - W @ coef
    return float(res @ res)


def dense_objective(dense, V, w, p, alpha, beta, mu, mode="full"):
    """Model objective from dense matrices, per mode."""
    n, r = V.shape
    S = sum(wk * A for wk, A in zip(w, dense))
    D = sum(pk * A for pk, A in zip(p, dense))
    Y = V @ V.T
    R = sum(projector_residual(V[:, j], np.delete(V, j, axis=1)) for j in range(r))
    fit = 0.5 * np.sum((S - Y) ** 2)
    if mode == "full":
        return fit + beta * np.sum(D * Y) - alpha * R + 0.5 * (mu - 1) * np.sum(S * S) + 0.5 * mu * np.sum(D * D)
    if mode == "no_orth":
        return fit + beta * np.sum(D * Y) + 0.5 * (mu - 1) * np.sum(S * S) + 0.5 * mu * np.sum(D * D)
    if mode == "no_dissim":
        return fit - alpha * R + 0.5 * mu * np.sum(S * S)
    if mode == "plain":
        return fit + 0.5 * mu * np.sum(S * S)
    if mode == "ao_symnmf":
        return fit - alpha * R
    raise ValueError(mode)


def dense_M(S, D, W, alpha, beta):
    """``S - beta D + alpha (I - W W^+) - W W^T`` formed explicitly."""
    n = S.shape[0]
    P = W @ np.linalg.pinv(W) if W.shape[1] else np.zeros((n, n))
    return S - beta * D + alpha * (np.eye(n) - P) - W @ W.T


def simplex_active_set(y):
    """Projection onto the simplex by enumerating every support set."""
    y = np.asarray(y, dtype=float)
    K = y.size
    best, best_d = None, np.inf
    for size in range(1, K + 1):
        for T in itertools.combinations(range(K), size):
            T = list(T)
            w = np.zeros(K)
            w[T] = y[T] - (y[T].sum() - 1.0) / size
            if np.any(w[T] < -1e-14):
                continue
            w = np.maximum(w, 0.0)
            d = np.sum((w - y) ** 2)
            if d < best_d:
                best, best_d = w, d
    return best


def acc_bruteforce(pred, truth):
    """Best accuracy over all injective maps from predicted to true labels."""
    pl, tl = sorted(set(pred)), sorted(set(truth))
    slots = tl + [None] * max(0, len(pl) - len(tl))
    best = 0
    for perm in itertools.permutations(slots, len(pl)):
        mapping = dict(zip(pl, perm))
        best = max(best, sum(mapping[a] == b for a, b in zip(pred, truth)))
    return best / len(pred)


def nmi_by_hand(pred, truth):
    """NMI with natural logs from the joint distribution, written out longhand."""
    n = len(pred)
    pairs = {}
    for a, b in zip(pred, truth):
        pairs[(a, b)] = pairs.get((a, b), 0) + 1
    pa, pb = {}, {}
    for (a, b), c in pairs.items():
        pa[a] = pa.get(a, 0) + c
        pb[b] = pb.get(b, 0) + c
    mi = sum(c / n * math.log((c / n) / ((pa[a] / n) * (pb[b] / n))) for (a, b), c in pairs.items())
    ha = -sum(c / n * math.log(c / n) for c in pa.values())
    hb = -sum(c / n * math.log(c / n) for c in pb.values())
    return mi / math.sqrt(ha * hb)


def ncut(Z, labels):
    total = 0.0
    for c in np.unique(labels):
        m = labels == c
        vol = Z[m].sum()
        cut = Z[np.ix_(m, ~m)].sum()
        total += cut / vol if vol > 0 else 0.0
    return total


def min_ncut_bruteforce(Z, r):
    """Exhaustive minimum normalized cut over every partition into ``r`` nonempty blocks."""
    n = Z.shape[0]
    best, best_lab = np.inf, None
    # first sample fixed to block 0 to halve the symmetric duplicates
    for tail in itertools.product(range(r), repeat=n - 1):
        lab = np.array((0,) + tail)
        if np.unique(lab).size != r:
            continue
        val = ncut(Z, lab)
        if val < best - 1e-12:
            best, best_lab = val, lab
    return best, best_lab


def same_partition(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.array_equal(a[:, None] == a[None, :], b[:, None] == b[None, :])
