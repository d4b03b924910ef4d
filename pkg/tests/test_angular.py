import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cadi.angular import (adi_exact, adi_sampled, cadi_exact, cadi_on_triplets, cadi_sampled,
                          squared_errors, stability_study)
from cadi.data import Dataset, Projection, partition_from_labels
from cadi.errors import AlignmentError, EmptyTripletSpaceError, ValidationError
from cadi.geometry import apply_similarity, random_rotation
from cadi.sampling import TripletArray, TripletBudget, sample_constrained

from . import oracles


def random_instance(seed, n=30, d=4, t=2, m=3):
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % m
    return Dataset(rng.normal(size=(n, d)), labels), Projection(rng.normal(size=(n, t)))


def random_similarity(points, rng):
    dim = points.shape[1]
    return apply_similarity(points, random_rotation(dim, rng), rng.uniform(0.1, 10.0),
                            rng.normal(size=dim) * 10)


def test_identity_projection_is_zero():
    X, _ = random_instance(0, d=2)
    Y = Projection(X.points)
    assert cadi_exact(X, Y).value == 0.0
    assert cadi_sampled(X, Y, budget=TripletBudget.times_n(5, 3)).value == 0.0
    assert adi_sampled(X, Y, TripletBudget.times_n(5, 3)).value == 0.0


def test_similarity_transform_gives_zero():
    X, _ = random_instance(1, d=3)
    rng = np.random.default_rng(2)
    Y = Projection(random_similarity(X.points, rng))
    assert cadi_exact(X, Y).value <= 1e-12
    assert adi_sampled(X, Y, TripletBudget.fixed(5000, 1)).value <= 1e-12


def test_mirrored_cluster_matches_brute_force():
    X = np.array([[0, 0], [1, 0.2], [0.3, 1], [4, 4], [5, 3.5], [4.2, 5.5]])
    labels = [0, 0, 0, 1, 1, 1]
    Y = X.copy()
    Y[3:, 0] = 2 * 4.4 - Y[3:, 0]  # mirror the second cluster about x = 4.4
    got = cadi_exact(X, Y, partition_from_labels(labels))
    assert got.triplet_count == 18
    assert got.value == pytest.approx(oracles.cadi(X, Y, labels), rel=1e-12, abs=1e-15)
    assert got.value > 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(5, 14), st.integers(2, 4))
def test_exact_matches_brute_force(seed, n, m):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, m, size=n)
    X = rng.normal(size=(n, 3))
    Y = rng.normal(size=(n, 2))
    p = partition_from_labels(labels)
    if not oracles.constrained_triplets(p.class_of.tolist()):
        with pytest.raises(EmptyTripletSpaceError):
            cadi_exact(X, Y, p)
        return
    assert cadi_exact(X, Y, p).value == pytest.approx(oracles.cadi(X, Y, labels), rel=1e-12, abs=1e-15)


def test_breakdown_is_consistent():
    X, Y = random_instance(3, n=40, m=4)
    score = cadi_exact(X, Y)
    bd = score.breakdown
    assert set(bd.entries) == {(a, b) for a in range(4) for b in range(4) if a != b}
    assert sum(c for _, c in bd.entries.values()) == score.triplet_count
    assert bd.total() == pytest.approx(score.value, rel=1e-12)
    M = bd.as_matrix(4)
    assert np.all(np.isnan(np.diag(M)))
    sampled = cadi_sampled(X, Y, budget=TripletBudget.fixed(3000, 5))
    assert sampled.breakdown.total() == pytest.approx(sampled.value, rel=1e-12)


def test_breakdown_per_pair_matches_brute_force():
    X, Y = random_instance(4, n=12, m=3)
    labels = X.labels.tolist()
    bd = cadi_exact(X, Y).breakdown
    for (a, b), (mean, count) in bd.entries.items():
        trip = [t for t in oracles.constrained_triplets(labels)
                if labels[t[0]] == a and labels[t[1]] == b]
        assert count == len(trip)
        assert mean == pytest.approx(oracles.mean_distortion(X.points, Y.points, trip), rel=1e-12)


def test_sampled_close_to_exact_and_records_params():
    X, Y = random_instance(5, n=60, d=5, m=3)
    exact = cadi_exact(X, Y).value
    s = cadi_sampled(X, Y, budget=TripletBudget.fixed(50000, 11))
    assert abs(s.value - exact) <= 5e-3
    res = s.to_result()
    assert res.params["k"] == 50000 and res.params["seed"] == 11
    assert res.params["rng"] == "numpy.PCG64"


def test_estimator_consistency_large_k():
    X, _ = random_instance(6, n=50, d=3, m=3)
    Y = X.points[:, :2]  # drop a coordinate: a plausible projection
    exact = cadi_exact(X, Y).value
    budget = TripletBudget.fixed(10**6, 1)
    # the bound is only meaningful if it is several standard errors wide
    spread = squared_errors(X.points, Y, sample_constrained(X.partition(), budget)).std()
    assert spread / 1000 < 4e-4
    assert abs(cadi_sampled(X, Y, budget=budget).value - exact) <= 1e-3


def test_adi_matches_exhaustive():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(5, 3))
    Y = rng.normal(size=(5, 2))
    brute = oracles.adi(X, Y)
    assert adi_exact(X, Y).value == pytest.approx(brute, rel=1e-12)
    assert adi_exact(X, Y).triplet_count == 30
    assert abs(adi_sampled(X, Y, TripletBudget.fixed(200000, 3)).value - brute) <= 5e-3


def test_adi_default_budget_is_100n():
    X, Y = random_instance(8, n=20)
    assert adi_sampled(X, Y).triplet_count == 2000
    assert cadi_sampled(X, Y).triplet_count == 800
    with pytest.raises(ValidationError):
        adi_sampled(np.zeros((2, 2)), np.zeros((2, 2)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_similarity_invariance_both_spaces(seed):
    rng = np.random.default_rng(seed)
    X, Y = random_instance(seed % 1000, n=int(rng.integers(10, 60)), d=4, m=3)
    trip = sample_constrained(X.partition(), TripletBudget.fixed(4000, seed))
    before = cadi_on_triplets(X, Y, trip)
    after = cadi_on_triplets(random_similarity(X.points, rng), random_similarity(Y.points, rng), trip)
    assert abs(before - after) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_non_negative_and_pair_symmetry(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(25, 3)) * rng.uniform(1e-3, 1e3)
    X[1] = X[0]  # an overlapping pair exercises the degenerate convention
    Y = rng.normal(size=(25, 2))
    labels = np.arange(25) % 3
    trip = sample_constrained(partition_from_labels(labels), TripletBudget.fixed(2000, seed))
    e = squared_errors(X, Y, trip)
    assert np.all(e >= 0)
    swapped = squared_errors(X, Y, TripletArray(trip.i, trip.k, trip.j))
    assert np.array_equal(e, swapped)


def test_degenerate_in_one_space_still_counts():
    X = np.array([[0.0, 0], [0, 0], [1, 0], [5, 5]])
    Y = np.array([[0.0, 0], [0, 1], [1, 0], [5, 5]])
    trip = TripletArray(np.array([3]), np.array([0]), np.array([1]))
    # X: j == k, both vectors equal -> cos 1; Y: genuine angle
    assert cadi_on_triplets(X, Y, trip) == pytest.approx(oracles.mean_distortion(X, Y, [(3, 0, 1)]))
    trip = TripletArray(np.array([0]), np.array([1]), np.array([2]))
    assert cadi_on_triplets(X, Y, trip) == pytest.approx((1.0 - 0.0) ** 2)


def test_errors():
    X, Y = random_instance(9, n=10)
    with pytest.raises(AlignmentError):
        cadi_exact(X, Projection(np.zeros((9, 2))))
    with pytest.raises(EmptyTripletSpaceError):
        cadi_exact(np.zeros((3, 2)), np.zeros((3, 2)), partition_from_labels([0, 1, 2]))
    with pytest.raises(EmptyTripletSpaceError):
        cadi_sampled(X.points, Y.points, partition_from_labels([0] * 10))
    with pytest.raises(ValidationError):
        cadi_exact(X.points, Y.points)  # no partition for a bare matrix


def test_thread_count_does_not_change_result(monkeypatch):
    X, Y = random_instance(10, n=80, m=4)
    budget = TripletBudget.fixed(100_000, 3)
    monkeypatch.setenv("CADI_THREADS", "1")
    one = cadi_sampled(X, Y, budget=budget).value, cadi_exact(X, Y).value
    monkeypatch.setenv("CADI_THREADS", "4")
    four = cadi_sampled(X, Y, budget=budget).value, cadi_exact(X, Y).value
    assert one == four


def test_stability_study_brackets_exact():
    X, Y = random_instance(11, n=60, d=3, m=3)
    exact = cadi_exact(X, Y).value
    rows = stability_study(X, Y, multipliers=[1, 5, 20], repetitions=40, base_seed=100)
    assert [r.k for r in rows] == [60, 300, 1200]
    for r in rows:
        assert r.min <= exact <= r.max
        assert r.min <= r.q1 <= r.median <= r.q3 <= r.max
        assert len(r.values) == 40
    assert rows[-1].iqr <= rows[0].iqr
    with pytest.raises(ValidationError):
        stability_study(X, Y, repetitions=1)


def test_sampled_estimator_is_unbiased():
    X, Y = random_instance(12, n=60, d=4, m=3)
    exact = cadi_exact(X, Y).value
    values = np.array([cadi_sampled(X, Y, budget=TripletBudget.fixed(5000, s)).value
                       for s in range(400)])
    se = values.std(ddof=1) / np.sqrt(len(values))
    assert abs(values.mean() - exact) <= 4 * se
    # the spread of single estimates follows the per-triplet standard deviation
    per_triplet = squared_errors(X.points, Y.points, sample_constrained(
        X.partition(), TripletBudget.fixed(10**6, 0))).std()
    assert values.std(ddof=1) == pytest.approx(per_triplet / np.sqrt(5000), rel=0.15)
