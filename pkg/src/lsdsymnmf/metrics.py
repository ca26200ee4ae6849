"""Clustering accuracy and normalized mutual information."""
import numpy as np
from scipy.optimize import linear_sum_assignment


def contingency(pred, truth):
    """Counts of (predicted, true) label pairs, rows = predicted labels."""
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.size == 0:
        raise ValueError("empty label vectors")
    if pred.shape != truth.shape:
        raise ValueError("label vectors differ in length")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def acc(pred, truth):
    """Fraction of samples correct under the best one-to-one label matching."""
    table = contingency(pred, truth)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / table.sum())


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth, average="geometric"):
    """Mutual information normalized by ``sqrt(H_pred H_true)`` (or the max)."""
    table = contingency(pred, truth)
    n = table.sum()
    h_pred = _entropy(table.sum(axis=1), n)
    h_true = _entropy(table.sum(axis=0), n)
    if h_pred == 0 or h_true == 0:
        # a one-block partition only matches another one-block partition
        return 1.0 if table.shape == (1, 1) else 0.0
    nz = table > 0
    pij = table[nz] / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))[nz] / n**2
    mi = float(np.sum(pij * np.log(pij / outer)))
    if average == "geometric":
        norm = np.sqrt(h_pred * h_true)
    elif average == "max":
        norm = max(h_pred, h_true)
    else:
        raise ValueError("average must be 'geometric' or 'max'")
    return float(min(max(mi / norm, 0.0), 1.0))
