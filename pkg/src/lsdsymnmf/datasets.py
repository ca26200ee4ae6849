"""Dataset loading and synthetic benchmark generators."""
import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

FORMATS = ("csv-features-label-last", "csv-features-only")


@dataclass(frozen=True)
class DataMatrix:
    values: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] < 2:
            raise ValueError("need a 2-D matrix with at least 2 samples")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("data contains non-finite values")
        if self.labels is not None and self.labels.shape != (self.values.shape[0],):
            raise ValueError("labels must have one entry per sample")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def m(self):
        return self.values.shape[1]

    @property
    def n_classes(self):
        if self.labels is None:
            return None
        return int(np.unique(self.labels).size)


def _parse_cell(cell, lineno, col):
    try:
        return float(cell)
    except ValueError:
        raise ValueError("line %d, column %d: non-numeric cell %r" % (lineno, col + 1, cell)) from None


def load_dataset(path, format="csv-features-label-last"):
    """Read a CSV with one sample per row.

    With ``csv-features-label-last`` the final column is an integer class id.
    Blank lines and lines starting with ``#`` are skipped.
    """
    if format not in FORMATS:
        raise ValueError("unknown format %r, expected one of %s" % (format, FORMATS))
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(
                    "line %d: ragged row with %d cells, expected %d" % (lineno, len(row), width)
                )
            rows.append([_parse_cell(c.strip(), lineno, i) for i, c in enumerate(row)])
    if len(rows) < 2:
        raise ValueError("%s: need at least 2 samples, found %d" % (path, len(rows)))
    arr = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("%s: non-finite entries" % path)

    if format == "csv-features-only":
        return DataMatrix(values=arr)
    if arr.shape[1] < 2:
        raise ValueError("%s: need at least one feature column before the label" % path)
    raw = arr[:, -1]
    if np.any(raw != np.round(raw)):
        raise ValueError("%s: label column must hold integers" % path)
    return DataMatrix(values=arr[:, :-1], labels=raw.astype(int))


def save_dataset(path, data):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for i, row in enumerate(data.values):
            cells = [repr(float(x)) for x in row]
            if data.labels is not None:
                cells.append(str(int(data.labels[i])))
            writer.writerow(cells)


def ring_centers(r, separation, dim=2):
    """``r`` centers on a regular polygon with neighbouring centers ``separation`` apart."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    centers = np.zeros((r, dim))
    if r == 1:
        return centers
    ang = 2 * np.pi * np.arange(r) / r
    radius = separation / (2 * np.sin(np.pi / r))
    centers[:, 0] = radius * np.cos(ang)
    centers[:, 1] = radius * np.sin(ang)
    return centers


def gaussian_blobs(n, r, separation, seed, std=1.0, dim=2):
    """Balanced isotropic Gaussian blobs around :func:`ring_centers`."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % r
    X = ring_centers(r, separation * std, dim)[labels] + std * rng.standard_normal((n, dim))
    return DataMatrix(values=X, labels=labels)


def random_blobs(n, r, seed, std=1.0, dim=2, box=10.0):
    """Blobs with uniformly drawn centers; neighbouring classes may overlap."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-box, box, size=(r, dim))
    labels = np.arange(n) % r
    X = centers[labels] + std * rng.standard_normal((n, dim))
    return DataMatrix(values=X, labels=labels)


def anisotropic_blobs(n, r, seed, box=8.0, dim=2):
    """Overlapping blobs, each sheared by its own random linear map.

    Centers are uniform in ``[-box, box]^dim`` and class ``k`` is
    ``c_k + z A_k`` with ``z`` standard normal and ``A_k`` a standard normal
    ``dim x dim`` matrix, so clusters are elongated and some overlap.
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % r
    centers = rng.uniform(-box, box, size=(r, dim))
    X = np.empty((n, dim))
    for k in range(r):
        idx = labels == k
        A = rng.standard_normal((dim, dim))
        X[idx] = centers[k] + rng.standard_normal((int(idx.sum()), dim)) @ A
    return DataMatrix(values=X, labels=labels)
