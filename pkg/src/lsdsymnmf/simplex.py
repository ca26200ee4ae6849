"""Euclidean projection onto the probability simplex and the (w, p) solver."""
from dataclasses import dataclass

import numpy as np

COUPLED_TOL = 1e-12


def project_simplex(y):
    """Nearest point to ``y`` on ``{w >= 0, sum(w) = 1}``.

    Sort-and-threshold scheme, O(K log K).
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("expected a non-empty vector")
    if not np.all(np.isfinite(y)):
        raise ValueError("input must be finite")
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, y.size + 1)
    rho = np.flatnonzero(u - css / idx > 0)[-1]
    theta = css[rho] / (rho + 1)
    w = np.maximum(y - theta, 0.0)
    # renormalize away rounding drift in the sum
    return w / w.sum()


@dataclass(frozen=True)
class WPSubproblem:
    """Relaxed (w, p) subproblem

    ``min mu/2 (|w|^2 + |p|^2) + c.(beta p - w) + eta w.p`` over two simplices.
    """

    c: np.ndarray
    mu: float
    beta: float
    eta: float
    t_max: int = 20

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.beta < 0 or self.eta < 0:
            raise ValueError("beta and eta must be nonnegative")
        if not self.mu > self.eta:
            raise ValueError(
                "need mu > eta for a strongly convex (w, p) subproblem "
                "(mu=%g, eta=%g)" % (self.mu, self.eta)
            )
        if not np.all(np.isfinite(self.c)):
            raise ValueError("slice scores must be finite")


def wp_objective(prob, w, p):
    c = np.asarray(prob.c, dtype=float)
    return (
        0.5 * prob.mu * (w @ w + p @ p)
        + c @ (prob.beta * p - w)
        + prob.eta * (w @ p)
    )


def solve_wp(prob, w0, p0, trace=None):
    """Alternate exact simplex projections for ``w`` and ``p``.

    Returns ``(w, p, coupled)`` where ``coupled`` reports ``w.p <= 1e-12``,
    i.e. whether the relaxed optimum also solves the problem with the hard
    ``w.p = 0`` constraint.  If ``trace`` is a list, the objective after
    every round is appended to it.
    """
    c = np.asarray(prob.c, dtype=float)
    w = np.asarray(w0, dtype=float)
    p = np.asarray(p0, dtype=float)
    if w.shape != c.shape or p.shape != c.shape:
        raise ValueError("w0, p0 and c must have the same length")
    mu, eta, beta = prob.mu, prob.eta, prob.beta
    for _ in range(int(prob.t_max)):
        w_new = project_simplex((c - eta * p) / mu)
        p_new = project_simplex(-(eta * w_new + beta * c) / mu)
        change = np.linalg.norm(w_new - w) + np.linalg.norm(p_new - p)
        w, p = w_new, p_new
        if trace is not None:
            trace.append(wp_objective(prob, w, p))
        if change <= 1e-12:
            break
    return w, p, bool(w @ p <= COUPLED_TOL)
