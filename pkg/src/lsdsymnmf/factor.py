"""Column-wise factor machinery.

Pseudo-inverse of the complement block ``V_-j``, the orthogonality
regularizer ``R(v_j) = v_j^T (I - V_-j V_-j^+) v_j``, the implicit product
``M v`` and the rank-one projected update.
"""
from dataclasses import dataclass

import numpy as np

PINV_RTOL = 1e-10
NEG_CLAMP = 1e-10


def reduced_pinv(W, rtol=PINV_RTOL):
    """Moore-Penrose pseudo-inverse from the thin SVD.

    Singular values below ``rtol * sigma_max`` are treated as zero.
    """
    W = np.asarray(W, dtype=float)
    n, q = W.shape
    if q == 0:
        return np.zeros((0, n))
    if q > n:
        raise ValueError("expected a tall matrix (q <= n)")
    U, s, Vt = np.linalg.svd(W, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((q, n))
    keep = s > rtol * s[0]
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


@dataclass(frozen=True)
class ColumnContext:
    V_minus_j: np.ndarray
    pinv: np.ndarray
    gram_ready: bool = True


def column_context(V, j, with_pinv=True):
    """Context for updating column ``j`` with every other column held fixed.

    ``with_pinv=False`` skips the SVD when the orthogonality weight is zero.
    """
    V = np.asarray(V, dtype=float)
    V_minus = np.delete(V, j, axis=1)
    if not with_pinv:
        return ColumnContext(V_minus_j=V_minus, pinv=None, gram_ready=False)
    return ColumnContext(V_minus_j=V_minus, pinv=reduced_pinv(V_minus))


def orth_reg(v, ctx):
    """Squared distance from ``v`` to the span of the other columns."""
    if not ctx.gram_ready:
        raise ValueError("column context is stale")
    v = np.asarray(v, dtype=float)
    vv = v @ v
    if ctx.V_minus_j.shape[1] == 0:
        return float(vv)
    val = vv - (ctx.V_minus_j.T @ v) @ (ctx.pinv @ v)
    if val < 0:
        # projector round-off; anything larger means a broken context
        if val < -NEG_CLAMP * max(1.0, vv):
            raise FloatingPointError("orthogonality term is negative: %g" % val)
        val = 0.0
    return float(val)


def m_times_v(v, S, D, ctx, alpha, beta):
    """``M v`` for ``M = S - beta D + alpha (I - W W^+) - W W^T``, ``W = V_-j``.

    ``M`` is never formed.  ``D`` may be ``None`` when ``S`` already holds the
    combined graph term.
    """
    v = np.asarray(v, dtype=float)
    out = S @ v
    if D is not None and beta != 0:
        out = out - beta * (D @ v)
    out = np.asarray(out, dtype=float).ravel() + alpha * v
    W = ctx.V_minus_j
    if W.shape[1]:
        coef = W.T @ v
        if alpha:
            if not ctx.gram_ready:
                raise ValueError("column context has no pseudo-inverse")
            coef = coef + alpha * (ctx.pinv @ v)
        out -= W @ coef
    return out


def surrogate(v, Mv):
    """Rank-one objective ``-v^T M v + |v|^4 / 2`` (constant term dropped)."""
    vv = v @ v
    return -(v @ Mv) + 0.5 * vv * vv


def rank_one_update(v, mv, max_halvings=20):
    """One projected fixed-point step for ``min_{v>=0} |M - v v^T|^2 / 2``.

    ``mv`` applies ``M`` to a vector.  The candidate
    ``max(M v / |v|^2, 0)`` is accepted along a backtracking path so the
    surrogate never increases.  Returns ``(v_new, d_norm)`` where ``d_norm``
    is ``|max(M v / |v|^2, 0) - v| * |v|^2`` evaluated at the input ``v``.
    """
    v = np.asarray(v, dtype=float)
    vv = v @ v
    if np.sqrt(vv) < 1e-12:
        n = v.size
        u = np.maximum(mv(np.full(n, 1.0 / np.sqrt(n))), 0.0)
        uu = u @ u
        if uu == 0:
            return v.copy(), 0.0
        uMu = u @ mv(u)
        if uMu <= 0:
            return v.copy(), 0.0
        # best point on the ray t*u
        return u * (np.sqrt(uMu) / uu), 0.0

    Mv = mv(v)
    u = np.maximum(Mv / vv, 0.0)
    d = u - v
    d_norm = float(np.linalg.norm(d) * vv)
    if d_norm == 0:
        return v.copy(), 0.0

    g0 = surrogate(v, Mv)
    Mu = mv(u)
    Md = Mu - Mv
    t = 1.0
    for _ in range(max_halvings + 1):
        cand = v + t * d
        if surrogate(cand, Mv + t * Md) < g0:
            return cand, d_norm
        t *= 0.5
    return v.copy(), d_norm
