"""Cluster-level comparison metrics: Silhouette, Davies-Bouldin, CDS, NMI, ARI.

Also the Spearman rank correlation used to compare metrics with each other.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial.distance import cdist

from .data import Dataset, Partition, check_aligned, dense_labels
from .errors import DegenerateMetricError, ValidationError

_CHUNK_ELEMS = 2_000_000


def _labels(labels, n: int | None = None) -> np.ndarray:
    dense, _ = dense_labels(list(labels))
    if n is not None and len(dense) != n:
        raise ValidationError(f"{len(dense)} labels for {n} points")
    return dense


def _one_hot(dense: np.ndarray) -> np.ndarray:
    m = int(dense.max()) + 1
    out = np.zeros((len(dense), m))
    out[np.arange(len(dense)), dense] = 1.0
    return out


def centroids(points, labels) -> np.ndarray:
    """Per-class mean vectors, row ``c`` for dense class ``c``."""
    pts = np.asarray(points, dtype=np.float64)
    dense = _labels(labels, len(pts))
    sums = np.zeros((int(dense.max()) + 1, pts.shape[1]))
    np.add.at(sums, dense, pts)
    return sums / np.bincount(dense)[:, None]


def silhouette(points, labels) -> float:
    """Mean silhouette coefficient; points in singleton classes score 0."""
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    dense = _labels(labels, n)
    m = int(dense.max()) + 1 if n else 0
    if n < 2:
        raise ValidationError("silhouette needs at least 2 points")
    if m < 2:
        raise ValidationError("silhouette needs at least 2 classes")
    if n <= m:
        raise ValidationError(f"silhouette needs more points ({n}) than classes ({m})")
    onehot = _one_hot(dense)
    sizes = onehot.sum(axis=0)
    scores = np.empty(n)
    step = max(1, _CHUNK_ELEMS // n)
    for start in range(0, n, step):
        rows = slice(start, start + step)
        class_sums = cdist(pts[rows], pts) @ onehot          # (r, m)
        own = dense[rows]
        r = np.arange(len(own))
        own_size = sizes[own]
        with np.errstate(invalid="ignore", divide="ignore"):
            a = class_sums[r, own] / (own_size - 1)
            means = class_sums / sizes
        means[r, own] = np.inf
        b = means.min(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = (b - a) / np.maximum(a, b)
        s[own_size == 1] = 0.0
        s[np.isnan(s)] = 0.0  # a == b == 0: coincident points
        scores[rows] = s
    return float(np.mean(scores))


def davies_bouldin(points, labels) -> float:
    """Davies-Bouldin index; ``math.inf`` when two class centroids coincide."""
    pts = np.asarray(points, dtype=np.float64)
    dense = _labels(labels, len(pts))
    m = int(dense.max()) + 1
    if m < 2:
        raise ValidationError("Davies-Bouldin needs at least 2 classes")
    cents = centroids(pts, dense)
    spread = np.bincount(dense, weights=np.linalg.norm(pts - cents[dense], axis=1),
                         minlength=m) / np.bincount(dense, minlength=m)
    sep = cdist(cents, cents)
    off = ~np.eye(m, dtype=bool)
    if np.any(sep[off] == 0.0):
        return math.inf
    ratio = (spread[:, None] + spread[None, :]) / np.where(off, sep, 1.0)
    ratio[~off] = -np.inf
    return float(np.mean(ratio.max(axis=1)))


def cluster_distance_score(X, Y, C: Partition | None = None) -> float:
    """Scale-fitted normalized stress between class-centroid distances.

    With ``h`` the pairwise centroid distances in data space and ``l`` those in
    the projection, returns ``min_s sum((h - s*l)**2) / sum(h**2)``, minimised
    in closed form at ``s = sum(h*l) / sum(l**2)``. Lower is better.
    """
    xp, yp = check_aligned(X, Y)
    if C is None:
        if not isinstance(X, Dataset):
            raise ValidationError("a partition is required when X is a bare matrix")
        C = X.partition()
    if C.m < 3:
        raise DegenerateMetricError(f"CDS is degenerate with {C.m} < 3 classes")
    labels = C.class_of
    iu = np.triu_indices(C.m, 1)
    h = cdist(centroids(xp, labels), centroids(xp, labels))[iu]
    lo = cdist(centroids(yp, labels), centroids(yp, labels))[iu]
    hh = float(np.dot(h, h))
    if hh == 0.0:
        raise DegenerateMetricError("all data-space class centroids coincide")
    ll = float(np.dot(lo, lo))
    s = float(np.dot(h, lo)) / ll if ll > 0 else 0.0
    resid = h - s * lo
    return float(np.dot(resid, resid)) / hh


def contingency_table(labels_a, labels_b) -> np.ndarray:
    a = _labels(labels_a)
    b = _labels(labels_b)
    if len(a) != len(b):
        raise ValidationError(f"labelings differ in length ({len(a)} vs {len(b)})")
    table = np.zeros((int(a.max()) + 1, int(b.max()) + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    return table


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(labels_a, labels_b) -> float:
    """Mutual information normalised by the arithmetic mean of the entropies."""
    if len(labels_a) == 0:
        raise ValidationError("empty labelings")
    table = contingency_table(labels_a, labels_b)
    n = int(table.sum())
    ra, cb = table.sum(axis=1), table.sum(axis=0)
    ha, hb = _entropy(ra, n), _entropy(cb, n)
    if ha == 0.0 and hb == 0.0:
        return 1.0
    nz = np.nonzero(table)
    nij = table[nz].astype(np.float64)
    mi = float(np.sum(nij / n * (np.log(nij * n) - np.log(ra[nz[0]] * cb[nz[1]].astype(np.float64)))))
    if mi <= 0.0:
        return 0.0
    return float(min(1.0, mi / ((ha + hb) / 2.0)))


def ari(labels_a, labels_b) -> float:
    """Adjusted Rand index (Hubert-Arabie pair counting)."""
    if len(labels_a) < 2:
        raise ValidationError("ARI needs at least 2 points")
    table = contingency_table(labels_a, labels_b)
    n = int(table.sum())

    def pairs(x):
        x = np.asarray(x, dtype=np.float64)
        return float(np.sum(x * (x - 1) / 2))

    index = pairs(table)
    sa, sb = pairs(table.sum(axis=1)), pairs(table.sum(axis=0))
    expected = sa * sb / (n * (n - 1) / 2)
    max_index = (sa + sb) / 2
    if max_index == expected:
        # only reachable when both labelings are all-singletons or both constant
        return 1.0
    return (index - expected) / (max_index - expected)


def average_ranks(xs) -> np.ndarray:
    """1-based ranks with ties sharing the mean of the ranks they span."""
    x = np.asarray(xs, dtype=np.float64)
    _, inv, cnt = np.unique(x, return_inverse=True, return_counts=True)
    start = np.cumsum(cnt) - cnt
    return (start + (cnt + 1) / 2.0)[inv]


def spearman(xs, ys) -> float:
    """Spearman rank correlation; NaN when either series is constant."""
    if len(xs) != len(ys):
        raise ValidationError(f"series differ in length ({len(xs)} vs {len(ys)})")
    if len(xs) < 2:
        raise ValidationError("Spearman needs at least 2 observations")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    den = math.sqrt(float(np.dot(rx, rx)) * float(np.dot(ry, ry)))
    if den == 0.0:
        return math.nan
    return float(np.clip(np.dot(rx, ry) / den, -1.0, 1.0))

