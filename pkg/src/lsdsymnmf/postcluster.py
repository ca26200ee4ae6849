"""From a fitted factorization to cluster labels.

The learned similarity ``S``, dissimilarity ``D`` and co-membership
``Y = V V^T`` are blended into one affinity ``Z`` that is then split with
normalized-affinity spectral clustering.
"""
from dataclasses import dataclass
import warnings

import numpy as np
import scipy.sparse as sp
from sklearn.cluster import KMeans


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    seed: int
    fingerprint: str = ""


def _dense(A, n):
    if A is None:
        return np.zeros((n, n))
    if sp.issparse(A):
        return A.toarray()
    return np.array(A, dtype=float)


def _unit_max(A):
    m = A.max()
    return A / m if m > 0 else A


def blend(y, d, s):
    """Elementwise affinity boost: raise ``s`` where ``y >= d``, damp it otherwise."""
    y, d, s = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (y, d, s)))
    return np.where(y >= d, 1.0 - (1.0 - y + d) * (1.0 - s), (1.0 + y - d) * s)


def augment(S, D, V):
    """Augmented affinity from ``S``, ``D`` and ``V V^T``.

    Each input is scaled by its global maximum.  The result is symmetrized,
    its diagonal zeroed and its entries clamped to ``[0, 1]``.
    """
    V = np.asarray(V, dtype=float)
    n = V.shape[0]
    Y = _unit_max(V @ V.T)
    Sd = _unit_max(_dense(S, n))
    Dd = _unit_max(_dense(D, n))
    if Sd.shape != (n, n) or Dd.shape != (n, n):
        raise ValueError("S, D and V have inconsistent shapes")
    Z = blend(Y, Dd, Sd)
    Z = 0.5 * (Z + Z.T)
    np.fill_diagonal(Z, 0.0)
    return np.clip(Z, 0.0, 1.0)


def kmeans(points, r, seed, n_init=10, max_iter=100):
    """k-means++ seeded Lloyd iterations, best inertia of ``n_init`` restarts."""
    points = np.asarray(points, dtype=float)
    if r > points.shape[0]:
        raise ValueError("more clusters than points")
    with warnings.catch_warnings():
        # identical points yield fewer distinct clusters than requested
        warnings.simplefilter("ignore")
        km = KMeans(
            n_clusters=r,
            init="k-means++",
            n_init=n_init,
            max_iter=max_iter,
            random_state=seed,
        ).fit(points)
    return km.labels_.astype(int)


def spectral_embedding(Z, r):
    """Row-normalized top-``r`` eigenvectors of ``Deg^-1/2 Z Deg^-1/2``."""
    Z = np.asarray(Z, dtype=float)
    deg = Z.sum(axis=1)
    scale = np.zeros_like(deg)
    pos = deg > 0
    scale[pos] = 1.0 / np.sqrt(deg[pos])
    L = scale[:, None] * Z * scale[None, :]
    L = 0.5 * (L + L.T)
    n = L.shape[0]
    _, vecs = np.linalg.eigh(L)
    E = vecs[:, n - r :][:, ::-1]
    norms = np.linalg.norm(E, axis=1)
    nz = norms > 0
    E[nz] /= norms[nz, None]
    return E


def spectral_cluster(Z, r, seed, fingerprint=""):
    Z = np.asarray(Z, dtype=float)
    n = Z.shape[0]
    if r > n:
        raise ValueError("rank r=%d exceeds the number of samples n=%d" % (r, n))
    E = spectral_embedding(Z, r)
    return ClusterAssignment(labels=kmeans(E, r, seed), seed=seed, fingerprint=fingerprint)
