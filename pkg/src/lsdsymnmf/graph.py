"""Kernel construction and k-th nearest neighbour slices.

A slice ``A^(k)`` keeps, for every sample ``i``, only the kernel value to
its k-th nearest neighbour.  Slices are stored per slice as one column index
and one value per row, so a slice has exactly ``n`` stored entries and the
union of all ``n - 1`` slices covers every off-diagonal position once.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist
from scipy.special import logsumexp


@dataclass(frozen=True)
class NeighborSlices:
    """Ordered k-th NN slices.

    ``cols[k, i]`` is the index of the (k+1)-th nearest neighbour of sample
    ``i`` and ``vals[k, i]`` the stored (normalized) kernel value at
    ``(i, cols[k, i])``.  ``frob_norms[k]`` is the Frobenius norm of slice k
    before normalization.
    """

    cols: np.ndarray
    vals: np.ndarray
    frob_norms: np.ndarray
    normalized: bool = True

    @property
    def n(self):
        return self.cols.shape[1]

    @property
    def K(self):
        return self.cols.shape[0]

    @property
    def sq_norms(self):
        """Squared Frobenius norm of each stored slice."""
        return np.einsum("ki,ki->k", self.vals, self.vals)

    def raw_vals(self):
        """Kernel values before normalization."""
        if not self.normalized:
            return self.vals
        return self.vals * self.frob_norms[:, None]

    def slice_matrix(self, k, raw=False):
        vals = self.raw_vals()[k] if raw else self.vals[k]
        n = self.n
        return sp.csr_matrix((vals, (np.arange(n), self.cols[k])), shape=(n, n))


def _check_data(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError("data must be a 2-D array with samples as rows")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples, got %d" % X.shape[0])
    if not np.all(np.isfinite(X)):
        raise ValueError("data contains non-finite values")
    return X


def self_tuning_kernel(X, scale_rank=7, log=False):
    """Locally scaled Gaussian kernel ``exp(-|xi - xj|^2 / (s_i s_j))``.

    ``s_i`` is the distance from ``x_i`` to its ``scale_rank``-th nearest
    other sample.  Zero scales (duplicated samples) are replaced with the
    smallest positive scale.  With ``log=True`` the exponent is returned
    instead, which keeps far pairs distinguishable where ``exp`` underflows.
    """
    X = _check_data(X)
    n = X.shape[0]
    scale_rank = int(scale_rank)
    if scale_rank < 1:
        raise ValueError("scale_rank must be a positive integer")
    if n < scale_rank + 1:
        raise ValueError("need n >= scale_rank + 1 (n=%d, scale_rank=%d)" % (n, scale_rank))

    sq = cdist(X, X, "sqeuclidean")
    dist = np.sqrt(sq)
    np.fill_diagonal(dist, np.inf)
    # scale_rank-th smallest distance to another sample
    sigma = np.partition(dist, scale_rank - 1, axis=1)[:, scale_rank - 1]
    if np.all(sigma <= 0):
        raise ValueError("degenerate dataset: all local scales are zero")
    sigma = np.where(sigma > 0, sigma, sigma[sigma > 0].min())

    return _finish(-sq / np.outer(sigma, sigma), log)


def gaussian_kernel(X, sigma, log=False):
    """Plain Gaussian kernel with one global bandwidth."""
    X = _check_data(X)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return _finish(-cdist(X, X, "sqeuclidean") / sigma**2, log)


def _finish(logK, log):
    np.fill_diagonal(logK, 0.0)
    return logK if log else np.exp(logK)


def neighbor_order(K, dist=None):
    """Per-row neighbour order, self excluded, ties to the smaller sample index.

    Orders by increasing ``dist`` when given, else by decreasing kernel value.
    Returns an ``(n, n-1)`` index array.
    """
    key = -np.asarray(K, dtype=float) if dist is None else np.array(dist, dtype=float)
    n = key.shape[0]
    np.fill_diagonal(key, np.inf)
    order = np.argsort(key, axis=1, kind="stable")
    return order[:, : n - 1]


def build_slices(K, normalize=True, log=False, dist=None):
    """Split a kernel matrix into its ``n - 1`` k-th nearest neighbour slices.

    Neighbours are ranked by ``dist`` if given, otherwise by kernel value;
    the two agree for a kernel with one global bandwidth but not for the
    locally scaled one.  ``log=True`` means ``K`` holds log kernel values;
    slices are then normalized in the log domain so that no slice collapses
    to zero.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("kernel must be a square matrix")
    n = K.shape[0]
    if n < 2:
        raise ValueError("need at least 2 samples")
    if log:
        if np.any(np.isnan(K)) or np.any(K == np.inf):
            raise ValueError("log kernel must not contain nan or +inf")
    elif np.any(K < 0) or not np.all(np.isfinite(K)):
        raise ValueError("kernel must be finite and nonnegative")

    if dist is not None and np.shape(dist) != K.shape:
        raise ValueError("dist must have the kernel's shape")
    cols = neighbor_order(K, dist).T.copy()  # (K, n)
    vals = K[np.arange(n)[None, :], cols]
    if log:
        log_norms = 0.5 * logsumexp(2.0 * vals, axis=1)
        bad = ~np.isfinite(log_norms)
    else:
        norms = np.sqrt(np.einsum("ki,ki->k", vals, vals))
        bad = norms == 0
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        hint = "" if log else "; try log-domain slices"
        raise ValueError("degenerate kernel: slice %d has zero norm%s" % (k + 1, hint))
    if log:
        norms = np.exp(log_norms)
        vals = np.exp(vals - log_norms[:, None]) if normalize else np.exp(vals)
    elif normalize:
        vals = vals / norms[:, None]
    return NeighborSlices(cols=cols, vals=vals, frob_norms=norms, normalized=normalize)


def slices_from_data(X, scale_rank=7):
    """Normalized slices of the self-tuning kernel, built in the log domain.

    The k-th slice links each sample to its k-th nearest neighbour in
    Euclidean distance, weighted by the kernel.
    """
    X = _check_data(X)
    dist = cdist(X, X, "sqeuclidean")
    return build_slices(self_tuning_kernel(X, scale_rank, log=True), log=True, dist=dist)


def combine(slices, weights):
    """Sparse ``sum_k weights[k] * A^(k)`` as a CSR matrix.

    Rows are assembled directly from the per-row neighbour lists, so the cost
    is linear in the number of stored entries.  Zero-weight slices are
    skipped.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (slices.K,):
        raise ValueError(
            "weights length %d does not match %d slices" % (weights.size, slices.K)
        )
    n = slices.n
    active = np.flatnonzero(weights)
    if active.size == 0:
        return sp.csr_matrix((n, n))
    data = (weights[active, None] * slices.vals[active]).T.ravel()
    indices = slices.cols[active].T.ravel()
    indptr = np.arange(n + 1) * active.size
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def slice_scores(slices, V, chunk_entries=2_000_000):
    """``c_k = <A^(k), V V^T>`` for every slice, summed over slice supports."""
    V = np.asarray(V, dtype=float)
    n, r = V.shape
    step = max(1, chunk_entries // max(1, n * r))
    out = np.empty(slices.K)
    for start in range(0, slices.K, step):
        cols = slices.cols[start : start + step]
        inner = np.einsum("ir,kir->ki", V, V[cols])
        out[start : start + step] = np.einsum("ki,ki->k", slices.vals[start : start + step], inner)
    return out


def correct_rate(slices, labels):
    """Fraction of same-class neighbour relations in each slice."""
    labels = np.asarray(labels)
    if labels.shape != (slices.n,):
        raise ValueError("labels must have one entry per sample")
    return np.mean(labels[slices.cols] == labels[None, :], axis=1)


def k0_for(n):
    """Neighbourhood size ``floor(log2 n) + 1``."""
    return int(n).bit_length()
