import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cadi.data import partition_from_labels
from cadi.errors import EmptyTripletSpaceError, ValidationError
from cadi.sampling import (TripletBudget, count_all_triplets, count_constrained_triplets,
                           enumerate_all, enumerate_constrained, sample_constrained,
                           sample_unconstrained, unrank_pairs)

from . import oracles


@pytest.mark.parametrize("labels, expected", [
    ([0, 0, 1, 1], 4),
    ([0, 1], 0),
    ([0, 0, 0, 0, 0], 0),
    ([0, 1, 1], 1),
    ([0, 0, 0, 1, 1, 2], 3 * 3 + 1 * 4),
])
def test_count_examples(labels, expected):
    assert count_constrained_triplets(partition_from_labels(labels)) == expected


def test_enumerate_hand_example():
    trip = enumerate_constrained(partition_from_labels([0, 0, 1, 1]))
    assert list(trip) == [(0, 2, 3), (1, 2, 3), (2, 0, 1), (3, 0, 1)]
    assert list(enumerate_constrained(partition_from_labels([0, 1, 1]))) == [(0, 1, 2)]
    with pytest.raises(EmptyTripletSpaceError):
        enumerate_constrained(partition_from_labels([0, 1]))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=2, max_size=9))
def test_enumeration_matches_brute_force(labels):
    p = partition_from_labels(labels)
    expected = oracles.constrained_triplets(p.class_of.tolist())
    assert count_constrained_triplets(p) == len(expected)
    if not expected:
        with pytest.raises(EmptyTripletSpaceError):
            enumerate_constrained(p)
        return
    got = list(enumerate_constrained(p))
    assert len(got) == len(set(got)) == len(expected)
    assert set(got) == set(expected)


def test_enumerate_order_is_lexicographic_in_class_pair():
    p = partition_from_labels([1, 0, 1, 0, 2, 2])
    trip = enumerate_constrained(p)
    key = [(p.class_of[t.i], p.class_of[t.j], t.i, t.j, t.k) for t in trip]
    assert key == sorted(key)


def test_unrank_pairs_is_bijective():
    r = np.arange(0, 5000)
    p, q = unrank_pairs(r)
    assert np.all(p < q) and np.all(p >= 0)
    assert len(set(zip(p.tolist(), q.tolist()))) == len(r)
    assert np.array_equal(q * (q - 1) // 2 + p, r)
    big = np.array([2**40 + 12345, 10**15, (10**7) * (10**7 - 1) // 2 - 1])
    p, q = unrank_pairs(big)
    assert np.array_equal(q * (q - 1) // 2 + p, big) and np.all(p < q)


def test_budget_resolution():
    assert TripletBudget.times_n(40).resolve(2760) == 110400
    assert TripletBudget.times_n(0.5).resolve(3) == 2
    assert TripletBudget.fixed(17).resolve(1000) == 17
    with pytest.raises(ValidationError):
        TripletBudget.exhaustive().resolve(10)
    with pytest.raises(ValidationError):
        TripletBudget("sometimes")


def test_constrained_sampler_deterministic_and_valid():
    labels = np.random.default_rng(0).integers(0, 4, size=50)
    p = partition_from_labels(labels)
    a = sample_constrained(p, TripletBudget.fixed(2000, seed=9))
    b = sample_constrained(p, TripletBudget.fixed(2000, seed=9))
    c = sample_constrained(p, TripletBudget.fixed(2000, seed=10))
    assert all(np.array_equal(getattr(a, f), getattr(b, f)) for f in "ijk")
    assert not np.array_equal(a.i, c.i)
    cls = p.class_of
    assert np.all(a.j < a.k)
    assert np.all((a.i != a.j) & (a.i != a.k))
    assert np.all(cls[a.j] == cls[a.k]) and np.all(cls[a.i] != cls[a.j])


def test_constrained_sampler_default_multiplier():
    p = partition_from_labels(np.repeat(np.arange(5), 552))
    assert len(sample_constrained(p, TripletBudget.times_n(40, 0))) == 110400


def test_two_by_two_frequencies():
    p = partition_from_labels([0, 0, 1, 1])
    trip = sample_constrained(p, TripletBudget.fixed(40000, seed=1))
    freq = Counter(trip)
    assert set(freq) == {(0, 2, 3), (1, 2, 3), (2, 0, 1), (3, 0, 1)}
    for f in freq.values():
        assert abs(f / 40000 - 0.25) <= 0.01


@pytest.mark.parametrize("labels", [
    [0, 1, 1],
    [0, 0, 1, 1, 1],
    [0, 1, 1, 2, 2, 2],
    [0, 0, 0, 0, 1, 1, 2, 3],
    [2, 2, 2, 2, 2, 2, 2, 0],
])
def test_constrained_sampler_is_uniform(labels):
    p = partition_from_labels(labels)
    space = oracles.constrained_triplets(p.class_of.tolist())
    T = len(space)
    draws = 200_000
    freq = Counter(sample_constrained(p, TripletBudget.fixed(draws, seed=123)))
    assert set(freq) == set(space)
    expected = draws / T
    se = math.sqrt(draws * (1 / T) * (1 - 1 / T))
    for trip in space:
        assert abs(freq[trip] - expected) <= 3 * se + 1e-9, trip


def test_unconstrained_three_points():
    trip = sample_unconstrained(3, TripletBudget.fixed(30000, seed=4))
    freq = Counter(trip)
    assert set(freq) == {(0, 1, 2), (1, 0, 2), (2, 0, 1)}
    for f in freq.values():
        assert abs(f / 30000 - 1 / 3) <= 0.01


def test_unconstrained_uniform_and_valid():
    n = 6
    space = oracles.all_triplets(n)
    assert count_all_triplets(n) == len(space)
    assert sorted(enumerate_all(n)) == sorted(space)
    draws = 120_000
    trip = sample_unconstrained(n, TripletBudget.fixed(draws, seed=8))
    assert np.all(trip.j < trip.k) and np.all((trip.i != trip.j) & (trip.i != trip.k))
    freq = Counter(trip)
    se = math.sqrt(draws / len(space) * (1 - 1 / len(space)))
    for t in space:
        assert abs(freq[t] - draws / len(space)) <= 3.5 * se


def test_unconstrained_errors_and_determinism():
    with pytest.raises(ValidationError):
        sample_unconstrained(2, TripletBudget.fixed(10))
    a = sample_unconstrained(100, TripletBudget.times_n(100, seed=2))
    b = sample_unconstrained(100, TripletBudget.times_n(100, seed=2))
    assert len(a) == 10000 and np.array_equal(a.k, b.k)
