"""Triplet spaces: counting, enumeration and uniform sampling.

A triplet ``(i, j, k)`` has reference point ``i`` and an unordered pair
``{j, k}`` stored with ``j < k``. In the class-constrained space ``j`` and
``k`` share a class and ``i`` belongs to a different one.

Sampling is i.i.d. with replacement. The constrained sampler is exactly
uniform: a class pair ``(a, b)`` is drawn with weight
``|C_a| * C(|C_b|, 2)`` from a single integer draw, then ``i`` uniformly in
``C_a``, then a pair rank uniformly in ``[0, C(|C_b|, 2))`` which is unranked
to ``(j, k)`` without rejection. The generator is numpy's PCG64 seeded with the
caller's seed, and the stream is consumed in that fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .data import Partition
from .errors import EmptyTripletSpaceError, ValidationError

RNG_ALGORITHM = "numpy.PCG64"

DEFAULT_CADI_MULTIPLIER = 40.0
DEFAULT_ADI_MULTIPLIER = 100.0
DEFAULT_TRAIN_MULTIPLIER = 10.0


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


class Triplet(NamedTuple):
    i: int
    j: int
    k: int


@dataclass(frozen=True)
class TripletArray:
    """Column-wise storage of many triplets."""

    i: np.ndarray
    j: np.ndarray
    k: np.ndarray

    def __len__(self) -> int:
        return len(self.i)

    def __iter__(self) -> Iterator[Triplet]:
        for t in zip(self.i.tolist(), self.j.tolist(), self.k.tolist()):
            yield Triplet(*t)

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            return Triplet(int(self.i[idx]), int(self.j[idx]), int(self.k[idx]))
        return TripletArray(self.i[idx], self.j[idx], self.k[idx])

    @classmethod
    def concat(cls, parts) -> TripletArray:
        parts = list(parts)
        if not parts:
            empty = np.empty(0, dtype=np.int64)
            return cls(empty, empty, empty)
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in "ijk"))


@dataclass(frozen=True)
class TripletBudget:
    """How many triplets to draw, and from which seed.

    ``mode`` is ``"multiplier"`` (k = ceil(multiplier * n)), ``"absolute"``
    (k = absolute) or ``"exhaustive"`` (enumerate the whole space).
    """

    mode: str = "multiplier"
    multiplier: float = DEFAULT_CADI_MULTIPLIER
    absolute: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("multiplier", "absolute", "exhaustive"):
            raise ValidationError(f"unknown budget mode {self.mode!r}")
        if self.mode == "multiplier" and not self.multiplier >= 0:
            raise ValidationError(f"multiplier must be >= 0, got {self.multiplier}")
        if self.mode == "absolute" and (self.absolute is None or self.absolute < 0):
            raise ValidationError(f"absolute budget must be >= 0, got {self.absolute}")

    @classmethod
    def times_n(cls, multiplier: float, seed: int = 0) -> TripletBudget:
        return cls("multiplier", multiplier=multiplier, seed=seed)

    @classmethod
    def fixed(cls, k: int, seed: int = 0) -> TripletBudget:
        return cls("absolute", absolute=k, seed=seed)

    @classmethod
    def exhaustive(cls) -> TripletBudget:
        return cls("exhaustive")

    def resolve(self, n: int) -> int:
        if self.mode == "absolute":
            return int(self.absolute)
        if self.mode == "multiplier":
            return int(math.ceil(self.multiplier * n))
        raise ValidationError("an exhaustive budget has no sample count")


# -- counting ----------------------------------------------------------------

def _pairs(s):
    return s * (s - 1) // 2


def class_pair_counts(p: Partition) -> np.ndarray:
    """``W[a, b] = |C_a| * C(|C_b|, 2)`` for ``a != b``, zero on the diagonal."""
    s = p.sizes.astype(np.int64)
    W = np.outer(s, _pairs(s))
    np.fill_diagonal(W, 0)
    return W


def count_constrained_triplets(p: Partition) -> int:
    """Size ``T`` of the class-constrained triplet space."""
    n = p.n
    return sum(int(_pairs(s)) * (n - int(s)) for s in p.sizes)


def count_all_triplets(n: int) -> int:
    """Number of (reference, unordered pair) triplets over ``n`` points."""
    return n * _pairs(n - 1) if n >= 3 else 0


def _require_nonempty(p: Partition) -> int:
    T = count_constrained_triplets(p)
    if T == 0:
        raise EmptyTripletSpaceError(
            "no between-class triplets: need one class with >= 2 points "
            "and at least one point outside it")
    return T


# -- enumeration -------------------------------------------------------------

def enumerate_constrained(p: Partition) -> TripletArray:
    """All constrained triplets, in ``(a, b, i, j, k)`` lexicographic order."""
    _require_nonempty(p)
    parts = []
    for a, ca in enumerate(p.classes):
        for b, cb in enumerate(p.classes):
            if a == b or len(cb) < 2 or len(ca) == 0:
                continue
            pj, pk = np.triu_indices(len(cb), 1)
            npairs = len(pj)
            parts.append(TripletArray(np.repeat(ca, npairs),
                                      np.tile(cb[pj], len(ca)),
                                      np.tile(cb[pk], len(ca))))
    return TripletArray.concat(parts)


def enumerate_all(n: int) -> TripletArray:
    """Every ``(i, {j, k})`` with distinct indices, ordered by ``i`` then pair."""
    if n < 3:
        raise ValidationError(f"need at least 3 points, got {n}")
    pj, pk = np.triu_indices(n, 1)
    parts = []
    for i in range(n):
        keep = (pj != i) & (pk != i)
        sel_j, sel_k = pj[keep], pk[keep]
        parts.append(TripletArray(np.full(len(sel_j), i, dtype=np.int64), sel_j, sel_k))
    return TripletArray.concat(parts)


# -- sampling ----------------------------------------------------------------

def unrank_pairs(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map ranks ``0, 1, 2, ...`` to pairs ``(0,1), (0,2), (1,2), (0,3), ...``.

    Colexicographic order: rank ``r`` is the pair ``(p, q)`` with
    ``q*(q-1)/2 + p == r`` and ``p < q``.
    """
    r = np.asarray(r, dtype=np.int64)
    q = ((1.0 + np.sqrt(1.0 + 8.0 * r.astype(np.float64))) / 2.0).astype(np.int64)
    # float sqrt can be off by one for large ranks
    q -= (q * (q - 1) // 2) > r
    q += ((q + 1) * q // 2) <= r
    return r - q * (q - 1) // 2, q


def sample_constrained(p: Partition, budget: TripletBudget) -> TripletArray:
    """Draw ``k`` triplets uniformly (with replacement) from the constrained space."""
    T = _require_nonempty(p)
    k = budget.resolve(p.n)
    if k < 1:
        raise ValidationError(f"budget resolves to {k} triplets; need at least 1")
    rng = make_rng(budget.seed)

    sizes = p.sizes
    m = len(sizes)
    W = class_pair_counts(p).ravel()
    cum = np.cumsum(W)
    assert int(cum[-1]) == T
    order = np.concatenate(p.classes)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])

    flat = np.searchsorted(cum, rng.integers(0, T, size=k), side="right")
    a, b = np.divmod(flat, m)
    i = order[offsets[a] + rng.integers(0, sizes[a])]
    pos_j, pos_k = unrank_pairs(rng.integers(0, _pairs(sizes[b])))
    return TripletArray(i, order[offsets[b] + pos_j], order[offsets[b] + pos_k])


def sample_unconstrained(n: int, budget: TripletBudget) -> TripletArray:
    """Draw ``k`` triplets uniformly over all ``(i, {j, k})`` with distinct indices."""
    if n < 3:
        raise ValidationError(f"need at least 3 points, got {n}")
    k = budget.resolve(n)
    if k < 1:
        raise ValidationError(f"budget resolves to {k} triplets; need at least 1")
    rng = make_rng(budget.seed)
    i = rng.integers(0, n, size=k)
    pj, pk = unrank_pairs(rng.integers(0, _pairs(n - 1), size=k))
    # pair drawn among the other n-1 points; shift indices past i
    j = pj + (pj >= i)
    kk = pk + (pk >= i)
    return TripletArray(i, j, kk)
