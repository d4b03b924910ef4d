"""Class Angular Distortion Index (CADI) and its unconstrained variant (ADI).

For a triplet ``(i, {j, k})`` the distortion is the squared difference between
the cosine of the angle at ``x_i`` in data space and the cosine of the angle at
``y_i`` in the projection. CADI averages it over triplets whose pair shares a
class that the reference point does not belong to; ADI averages it over every
triplet of distinct points.

Reductions run over fixed-size chunks and combine chunk sums in a fixed order,
so the result does not depend on ``CADI_THREADS``.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .data import Dataset, MetricResult, Partition, Projection, check_aligned
from .errors import ValidationError
from .geometry import EPS, triplet_cosines
from .sampling import (DEFAULT_ADI_MULTIPLIER, DEFAULT_CADI_MULTIPLIER, RNG_ALGORITHM,
                       TripletArray, TripletBudget, _require_nonempty, enumerate_all,
                       sample_constrained, sample_unconstrained)

CHUNK = 8192


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("CADI_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ClassPairBreakdown:
    """Mean distortion and triplet count per ordered (reference class, pair class)."""

    entries: dict[tuple[int, int], tuple[float, int]]

    def total(self) -> float:
        num = sum(mean * cnt for mean, cnt in self.entries.values())
        den = sum(cnt for _, cnt in self.entries.values())
        return num / den

    def as_matrix(self, m: int) -> np.ndarray:
        """``M[a, b]`` = mean distortion of class ``b`` seen from class ``a``; NaN if unseen."""
        M = np.full((m, m), np.nan)
        for (a, b), (mean, _) in self.entries.items():
            M[a, b] = mean
        return M


@dataclass
class CadiScore:
    value: float
    triplet_count: int
    mode: str  # "exact" or "sampled"
    seed: int | None = None
    breakdown: ClassPairBreakdown | None = None
    elapsed_seconds: float = 0.0
    metric: str = "cadi"
    params: dict = field(default_factory=dict)

    def to_result(self) -> MetricResult:
        params = {"k": self.triplet_count, "mode": self.mode, **self.params}
        if self.seed is not None:
            params["seed"] = self.seed
            params["rng"] = RNG_ALGORITHM
        return MetricResult(self.metric, self.value, params, self.elapsed_seconds)


# -- core reduction ----------------------------------------------------------

def squared_errors(xp: np.ndarray, yp: np.ndarray, trip: TripletArray,
                   eps: float = EPS) -> np.ndarray:
    """Per-triplet ``(cos_X - cos_Y)**2``."""
    cx = triplet_cosines(xp, trip.i, trip.j, trip.k, eps)
    cy = triplet_cosines(yp, trip.i, trip.j, trip.k, eps)
    return (cx - cy) ** 2


def _chunks(trip: TripletArray, size: int = CHUNK) -> Iterator[TripletArray]:
    for start in range(0, len(trip), size):
        yield trip[start:start + size]


def _reduce(xp, yp, chunks: Iterable[TripletArray], class_of=None, m: int = 0):
    """Sum squared errors over ``chunks``; optionally tally per class pair.

    Returns ``(total, count, pair_sums, pair_counts)``; the pair arrays are
    ``m*m`` flat (row = reference class) or ``None``.
    """
    def work(c: TripletArray):
        e = squared_errors(xp, yp, c)
        if class_of is None:
            return np.sum(e), len(e), None, None
        pid = class_of[c.i] * m + class_of[c.j]
        return (np.sum(e), len(e), np.bincount(pid, weights=e, minlength=m * m),
                np.bincount(pid, minlength=m * m))

    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    count = sum(p[1] for p in parts)
    total = float(np.sum(np.array([p[0] for p in parts]))) if parts else 0.0
    if class_of is None:
        return total, count, None, None
    psum = np.sum(np.stack([p[2] for p in parts]), axis=0)
    pcnt = np.sum(np.stack([p[3] for p in parts]), axis=0)
    return total, count, psum, pcnt


def _breakdown(psum, pcnt, m) -> ClassPairBreakdown:
    entries = {}
    for flat in np.flatnonzero(pcnt):
        a, b = divmod(int(flat), m)
        entries[(a, b)] = (float(psum[flat] / pcnt[flat]), int(pcnt[flat]))
    return ClassPairBreakdown(entries)


def _resolve(X, Y, C) -> tuple[np.ndarray, np.ndarray, Partition]:
    xp, yp = check_aligned(X, Y)
    if C is None:
        if not isinstance(X, Dataset):
            raise ValidationError("a partition is required when X is a bare matrix")
        C = X.partition()
    if C.n != xp.shape[0]:
        raise ValidationError(f"partition covers {C.n} points, data has {xp.shape[0]}")
    return xp, yp, C


def cadi_on_triplets(X, Y, triplets: TripletArray) -> float:
    """Mean distortion over an explicit triplet list (no class check)."""
    xp, yp = check_aligned(X, Y)
    if len(triplets) == 0:
        raise ValidationError("empty triplet list")
    total, count, _, _ = _reduce(xp, yp, _chunks(triplets))
    return total / count


# -- CADI --------------------------------------------------------------------

def _exact_blocks(p: Partition) -> Iterator[TripletArray]:
    """Enumerate the constrained space lazily, in (a, b, i, j, k) order."""
    for a, ca in enumerate(p.classes):
        for b, cb in enumerate(p.classes):
            if a == b or len(cb) < 2:
                continue
            pj, pk = np.triu_indices(len(cb), 1)
            j, k = cb[pj], cb[pk]
            per_chunk = max(1, CHUNK // len(j))
            for start in range(0, len(ca), per_chunk):
                refs = ca[start:start + per_chunk]
                yield TripletArray(np.repeat(refs, len(j)), np.tile(j, len(refs)),
                                   np.tile(k, len(refs)))


def cadi_exact(X, Y, C: Partition | None = None) -> CadiScore:
    """CADI over the full constrained triplet space, with per-class-pair breakdown."""
    t0 = time.perf_counter()
    xp, yp, C = _resolve(X, Y, C)
    T = _require_nonempty(C)
    total, count, psum, pcnt = _reduce(xp, yp, _exact_blocks(C), C.class_of, C.m)
    assert count == T
    return CadiScore(total / T, T, "exact", breakdown=_breakdown(psum, pcnt, C.m),
                     elapsed_seconds=time.perf_counter() - t0)


def cadi_sampled(X, Y, C: Partition | None = None,
                 budget: TripletBudget | None = None) -> CadiScore:
    """Monte-Carlo CADI from ``budget`` (default ``40n`` triplets, seed 0)."""
    budget = budget or TripletBudget.times_n(DEFAULT_CADI_MULTIPLIER)
    if budget.mode == "exhaustive":
        return cadi_exact(X, Y, C)
    t0 = time.perf_counter()
    xp, yp, C = _resolve(X, Y, C)
    trip = sample_constrained(C, budget)
    total, count, psum, pcnt = _reduce(xp, yp, _chunks(trip), C.class_of, C.m)
    return CadiScore(total / count, count, "sampled", seed=budget.seed,
                     breakdown=_breakdown(psum, pcnt, C.m),
                     elapsed_seconds=time.perf_counter() - t0)


def cadi(X, Y, C=None, budget=None) -> CadiScore:
    return cadi_sampled(X, Y, C, budget)


# -- ADI ---------------------------------------------------------------------

def adi_sampled(X, Y, budget: TripletBudget | None = None) -> CadiScore:
    """Angular distortion over unconstrained triplets (default ``100n``)."""
    budget = budget or TripletBudget.times_n(DEFAULT_ADI_MULTIPLIER)
    if budget.mode == "exhaustive":
        return adi_exact(X, Y)
    t0 = time.perf_counter()
    xp, yp = check_aligned(X, Y)
    trip = sample_unconstrained(xp.shape[0], budget)
    total, count, _, _ = _reduce(xp, yp, _chunks(trip))
    return CadiScore(total / count, count, "sampled", seed=budget.seed, metric="adi",
                     elapsed_seconds=time.perf_counter() - t0)


def adi_exact(X, Y) -> CadiScore:
    t0 = time.perf_counter()
    xp, yp = check_aligned(X, Y)
    trip = enumerate_all(xp.shape[0])
    total, count, _, _ = _reduce(xp, yp, _chunks(trip))
    return CadiScore(total / count, count, "exact", metric="adi",
                     elapsed_seconds=time.perf_counter() - t0)


# -- sampling stability ------------------------------------------------------

@dataclass(frozen=True)
class StabilityRow:
    multiplier: float
    k: int
    repetitions: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    std: float
    values: tuple[float, ...] = field(repr=False, default=())

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def stability_study(X, Y, C: Partition | None = None, multipliers=(1, 2, 5, 10, 20, 40),
                    repetitions: int = 200, base_seed: int = 0) -> list[StabilityRow]:
    """Spread of sampled CADI across seeds ``base_seed .. base_seed + R - 1``."""
    if repetitions < 2:
        raise ValidationError(f"need at least 2 repetitions, got {repetitions}")
    xp, yp, C = _resolve(X, Y, C)
    rows = []
    for mult in multipliers:
        vals = np.array([
            cadi_sampled(xp, yp, C, TripletBudget.times_n(mult, base_seed + r)).value
            for r in range(repetitions)])
        q1, med, q3 = np.percentile(vals, [25, 50, 75])
        rows.append(StabilityRow(float(mult), TripletBudget.times_n(mult).resolve(C.n),
                                 repetitions, float(vals.min()), float(q1), float(med),
                                 float(q3), float(vals.max()), float(vals.std(ddof=1)),
                                 tuple(vals.tolist())))
    return rows
