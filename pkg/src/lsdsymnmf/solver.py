"""Alternating minimization over the factor ``V`` and slice weights ``(w, p)``.

The full objective is::

    1/2 |S(w) - V V^T|^2 + beta <D(p), V V^T> - alpha sum_j R(v_j)
        + (mu - 1)/2 |S(w)|^2 + mu/2 |D(p)|^2

with ``w``, ``p`` on the simplex and ``w.p = 0``.  Ablation modes drop the
orthogonality term, the dissimilarity graph, or both; ``ao_symnmf`` keeps the
k0-NN graph fixed and only factorizes it.
"""
from dataclasses import dataclass, field, asdict
import hashlib
import json
import logging

import numpy as np

from .factor import column_context, m_times_v, orth_reg, rank_one_update
from .graph import combine, k0_for, slice_scores
from .simplex import COUPLED_TOL, WPSubproblem, project_simplex, solve_wp

log = logging.getLogger(__name__)

MODES = ("full", "no_orth", "no_dissim", "plain", "ao_symnmf")
MONOTONE_SLACK = 1e-9


class SolverDivergence(FloatingPointError):
    """Non-finite objective; ``state`` holds the last iterate for inspection."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


@dataclass
class SolverConfig:
    r: int
    alpha: float = 0.1
    beta: float = 10.0
    mu: float = 0.1
    eta_ratio: float = 0.99
    max_iter: int = 1000
    tol_loss: float = 1e-4
    tol_var: float = 1e-4
    seed: int = 0
    mode: str = "full"
    t_max: int = 20
    warm_sweeps: int = 500
    warm_tol: float = 1e-4

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError("unknown mode %r, expected one of %s" % (self.mode, MODES))
        if int(self.r) < 1:
            raise ValueError("rank r must be >= 1")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 0 <= self.eta_ratio < 1:
            raise ValueError("eta_ratio must lie in [0, 1) so that eta < mu")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    @property
    def eta(self):
        return self.eta_ratio * self.mu

    @property
    def uses_dissim(self):
        return self.mode in ("full", "no_orth")

    @property
    def learns_weights(self):
        return self.mode != "ao_symnmf"

    @property
    def effective_alpha(self):
        return 0.0 if self.mode in ("no_orth", "plain") else float(self.alpha)

    @property
    def effective_beta(self):
        return float(self.beta) if self.uses_dissim else 0.0

    def fingerprint(self):
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class SolverState:
    slices: object
    V: np.ndarray
    w: np.ndarray
    p: np.ndarray
    S: object
    D: object
    k0: int
    loss_trace: list = field(default_factory=list)
    delta_trace: list = field(default_factory=list)
    kkt_residuals: list = field(default_factory=list)
    coupled_trace: list = field(default_factory=list)
    coupled: bool = True
    n_iter: int = 0
    exit_reason: str = ""

    @property
    def kkt_max(self):
        """``max_j |v_j|^4 |d_j|^2`` from the last sweep."""
        if not self.kkt_residuals:
            return float("nan")
        return float(np.max(np.asarray(self.kkt_residuals[-1]) ** 2))


def _sym(C):
    return ((C + C.T) * 0.5).tocsr()


def _graph_term(S, D, beta):
    """Symmetric part of ``S - beta D``; the V-subproblem only sees this."""
    C = S if D is None or beta == 0 else S - beta * D
    return _sym(C)


def sweep(V, C_sym, alpha):
    """One pass of rank-one updates over the columns of ``V`` (in place).

    Returns the KKT residual ``|v_j|^2 |d_j|`` of every column, measured
    before its update.
    """
    r = V.shape[1]
    d_norms = np.empty(r)
    for j in range(r):
        ctx = column_context(V, j, with_pinv=alpha != 0)

        def mv(x, ctx=ctx):
            return m_times_v(x, C_sym, None, ctx, alpha, 0.0)

        V[:, j], d_norms[j] = rank_one_update(V[:, j], mv)
    return d_norms


def orth_sum(V):
    return sum(orth_reg(V[:, j], column_context(V, j)) for j in range(V.shape[1]))


def _relchange(new, old):
    den = np.linalg.norm(old)
    num = np.linalg.norm(new - old)
    if den == 0:
        return 0.0 if num == 0 else np.inf
    return num / den


def _objective(slices, V, w, p, config, c=None):
    if c is None:
        c = slice_scores(slices, V)
    sq = slices.sq_norms
    G = V.T @ V
    sw = np.dot(w * w, sq)
    loss = 0.5 * (sw - 2.0 * (w @ c) + np.sum(G * G))
    alpha = config.effective_alpha
    if alpha:
        loss -= alpha * orth_sum(V)
    if config.uses_dissim:
        loss += config.beta * (p @ c)
        loss += 0.5 * (config.mu - 1.0) * sw + 0.5 * config.mu * np.dot(p * p, sq)
    elif config.learns_weights:
        loss += 0.5 * config.mu * sw
    return float(loss)


def monitored_objective(state, config):
    """Objective of the configured mode at the current iterate.

    Uses ``|S - V V^T|^2 = |S|^2 - 2 <S, V V^T> + |V^T V|^2`` and slice scores
    over the sparse supports, so ``V V^T`` is never formed.
    """
    return _objective(state.slices, state.V, state.w, state.p, config)


def lower_bound(n, alpha):
    """Analytic lower bound on the full objective."""
    return -np.sqrt(n) - 0.5 * alpha**2 * n - 0.5 * n


def _assemble(slices, w, p, config):
    S = combine(slices, w)
    D = combine(slices, p) if config.uses_dissim else None
    return S, D


def initialize(slices, config):
    n, K = slices.n, slices.K
    r = int(config.r)
    if r > n:
        raise ValueError("rank r=%d exceeds the number of samples n=%d" % (r, n))
    k0 = k0_for(n)
    if K <= k0:
        raise ValueError(
            "n=%d leaves no slices for the dissimilarity weights (k0=%d)" % (n, k0)
        )
    w = np.zeros(K)
    w[:k0] = 1.0 / k0
    p = np.zeros(K)
    p[k0:] = 1.0 / (K - k0)

    rng = np.random.default_rng(config.seed)
    V = rng.uniform(0.0, 1.0, size=(n, r))

    S = combine(slices, w)
    S_sym = _sym(S)
    # scale V0 so that V0 V0^T best matches S in Frobenius norm
    G = V.T @ V
    fit = np.sum(V * (S_sym @ V))
    if fit > 0:
        V *= (fit / np.sum(G * G)) ** 0.25

    for _ in range(int(config.warm_sweeps)):
        V_old = V.copy()
        sweep(V, S_sym, 0.0)
        if _relchange(V, V_old) <= config.warm_tol:
            break

    D = combine(slices, p) if config.uses_dissim else None
    return SolverState(slices=slices, V=V, w=w, p=p, S=S, D=D, k0=k0)


def _update_weights(state, config, c):
    """New ``(w, p, coupled)``; without D, ``p`` stays put and ``coupled`` is just ``w.p <= tol``."""
    if config.uses_dissim:
        prob = WPSubproblem(
            c=c, mu=config.mu, beta=config.beta, eta=config.eta, t_max=config.t_max
        )
        return solve_wp(prob, state.w, state.p)
    w = state.w
    if config.learns_weights:
        # density weight (1 + mu)/2 on |w|^2 once D is removed
        w = project_simplex(c / (1.0 + config.mu))
    return w, state.p, bool(w @ state.p <= COUPLED_TOL)


def _dump(state, b):
    return (
        "non-finite objective at iteration %d: |V|=%g, sum(w)=%g, sum(p)=%g, "
        "finite(V)=%s" % (
            b,
            np.linalg.norm(state.V),
            state.w.sum(),
            state.p.sum(),
            bool(np.all(np.isfinite(state.V))),
        )
    )


def fit(slices, config, state=None, callback=None):
    """Run the alternating scheme until a stopping rule fires.

    Stops when the iteration cap is reached, the relative objective change is
    at most ``tol_loss``, or the relative variable change is at most
    ``tol_var``.  ``loss_trace[0]`` is the objective at initialization.
    """
    if state is None:
        state = initialize(slices, config)
    alpha = config.effective_alpha
    beta = config.effective_beta

    loss = monitored_objective(state, config)
    state.loss_trace.append(loss)
    if not np.isfinite(loss):
        raise SolverDivergence(_dump(state, 0), state)

    C_sym = _graph_term(state.S, state.D, beta)
    for b in range(1, int(config.max_iter) + 1):
        V_old, w_old, p_old = state.V.copy(), state.w, state.p

        d_norms = sweep(state.V, C_sym, alpha)
        c = slice_scores(slices, state.V)
        state.w, state.p, coupled = _update_weights(state, config, c)
        if config.learns_weights:
            state.S, state.D = _assemble(slices, state.w, state.p, config)
            C_sym = _graph_term(state.S, state.D, beta)

        loss = _objective(slices, state.V, state.w, state.p, config, c)
        delta = (
            _relchange(state.V, V_old)
            + _relchange(state.w, w_old)
            + _relchange(state.p, p_old)
        )
        state.loss_trace.append(loss)
        state.delta_trace.append(float(delta))
        state.kkt_residuals.append(d_norms)
        state.coupled_trace.append(coupled)
        state.coupled = coupled
        state.n_iter = b
        if callback is not None:
            callback(state)

        if not np.isfinite(loss):
            raise SolverDivergence(_dump(state, b), state)
        prev = state.loss_trace[-2]
        rel = abs(prev - loss) / abs(prev) if prev != 0 else abs(prev - loss)
        if rel <= config.tol_loss:
            state.exit_reason = "loss"
            break
        if delta <= config.tol_var:
            state.exit_reason = "var"
            break
    else:
        state.exit_reason = "max_iter"

    log.debug(
        "fit: mode=%s iterations=%d exit=%s loss=%.6g coupled=%s",
        config.mode, state.n_iter, state.exit_reason, state.loss_trace[-1], state.coupled,
    )
    return state
