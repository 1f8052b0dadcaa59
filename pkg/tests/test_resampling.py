from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from defectbench.dataset import Dataset
from defectbench.resampling import (
    clni_filter, kmeans, kmfos, kmfos_generate, kmfos_oversample, kmfos_plan,
)


# -- oracles -------------------------------------------------------------------

def lloyd_random_restarts(X, k, restarts=50, seed=0, iters=100):
    """Plain Lloyd from random data points, best of many restarts."""
    rng = np.random.default_rng(seed)
    best = np.inf
    for _ in range(restarts):
        C = X[rng.choice(len(X), k, replace=False)].copy()
        for _ in range(iters):
            lab = np.argmin(((X[:, None] - C[None]) ** 2).sum(-1), axis=1)
            C = np.array([X[lab == c].mean(0) if np.any(lab == c) else C[c] for c in range(k)])
        lab = np.argmin(((X[:, None] - C[None]) ** 2).sum(-1), axis=1)
        best = min(best, ((X - C[lab]) ** 2).sum())
    return best


def clni_oracle(X, y, kn):
    """Brute force: sort every other point by (distance, index)."""
    n = len(X)
    keep = []
    for i in range(n):
        d = [(float(((X[i] - X[j]) ** 2).sum()), j) for j in range(n) if j != i]
        nbrs = [j for _, j in sorted(d)[:kn]]
        opposite = sum(y[j] != y[i] for j in nbrs)
        keep.append(not opposite > kn / 2)
    return np.array(keep)


# -- k-means -------------------------------------------------------------------

def test_kmeans_two_obvious_clusters():
    X = np.array([[0, 0], [0, 1], [10, 0], [10, 1]], dtype=float)
    cm = kmeans(X, 2, seed=0)
    centers = sorted(map(tuple, cm.centers))
    np.testing.assert_allclose(centers, [(0, 0.5), (10, 0.5)])
    assert cm.inertia == pytest.approx(1.0)
    assert cm.sizes.tolist() == [2, 2]


def test_kmeans_single_cluster():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((25, 3))
    cm = kmeans(X, 1, seed=4)
    np.testing.assert_allclose(cm.centers[0], X.mean(0))
    assert not cm.assignment.any()


def test_kmeans_vs_restart_oracle():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((30, 2))
    oracle = lloyd_random_restarts(X, 3)
    assert kmeans(X, 3, seed=0).inertia <= oracle * 1.05


def test_kmeans_errors():
    X = np.zeros((3, 2))
    with pytest.raises(ValueError):
        kmeans(X, 4)
    with pytest.raises(ValueError):
        kmeans(X, 0)


def test_kmeans_duplicates_fill_every_cluster():
    X = np.array([[0.0, 0.0]] * 6 + [[1.0, 1.0]] * 2)
    cm = kmeans(X, 3, seed=0)
    assert cm.sizes.min() >= 1 and cm.sizes.sum() == 8


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 6))
def test_kmeans_nearest_center_and_monotone(seed, k):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((40, 3))
    init = X[rng.choice(40, k, replace=False)]
    inertias = [kmeans(X, k, init=init, max_iter=i, tol=0).inertia for i in range(1, 8)]
    assert all(b <= a + 1e-9 for a, b in zip(inertias, inertias[1:]))
    cm = kmeans(X, k, seed=seed)
    d2 = ((X[:, None] - cm.centers[None]) ** 2).sum(-1)
    assert np.array_equal(cm.assignment, np.argmin(d2, axis=1))
    assert cm.sizes.sum() == 40 and cm.sizes.min() >= 1


# -- quota plan ----------------------------------------------------------------

def test_plan_single_pair():
    plan = kmfos_plan((2, 2), 10, 4)
    assert plan.total == 6
    assert [(p.p, p.q, p.quota) for p in plan.pairs] == [(0, 1, 6)]
    assert plan.pairs[0].delta == plan.pairs[0].gamma == Fraction(1, 2)


def test_plan_three_clusters():
    plan = kmfos_plan((5, 3, 2), 30, 10)
    assert [(p.p, p.q, p.quota) for p in plan.pairs] == [(0, 1, 8), (0, 2, 7), (1, 2, 5)]
    assert plan.pairs[0].delta == Fraction(5, 8) and plan.pairs[0].gamma == Fraction(3, 8)


def test_plan_errors():
    with pytest.raises(ValueError):
        kmfos_plan((4,), 10, 4)
    with pytest.raises(ValueError):
        kmfos_plan((4, 0), 10, 4)
    with pytest.raises(ValueError):
        kmfos_plan((2, 2), 3, 4)
    with pytest.raises(ValueError):
        kmfos_plan((2, 3), 10, 4)


def test_plan_remainder_goes_to_largest_fraction():
    # exact quotas: (0,1)=7/3, (0,2)=7/3, (1,2)=4/3 for N=5 -> floors 2,2,1 sum 5
    plan = kmfos_plan((4, 3, 0 + 1), 12, 8)
    exact = [Fraction(s * 4, 2 * 8) for s in (7, 5, 4)]
    assert [p.exact for p in plan.pairs] == exact
    assert sum(p.quota for p in plan.pairs) == 4
    # fractions .75, .25, 0 with one unit of remainder -> pair (0,1)
    assert [p.quota for p in plan.pairs] == [2, 1, 1]


sizes_st = st.lists(st.integers(1, 40), min_size=2, max_size=8)


@settings(max_examples=300, deadline=None)
@given(sizes=sizes_st, extra=st.integers(0, 500))
def test_plan_quota_identity(sizes, extra):
    n1 = sum(sizes)
    n0 = n1 + extra
    plan = kmfos_plan(sizes, n0, n1)
    k = len(sizes)
    exact = [Fraction((sizes[p] + sizes[q]) * (n0 - n1), (k - 1) * n1)
             for p, q in combinations(range(k), 2)]
    assert sum(exact) == n0 - n1
    assert sum(p.quota for p in plan.pairs) == n0 - n1
    for pair, e in zip(plan.pairs, exact):
        assert pair.exact == e
        assert e - 1 < pair.quota < e + 1
        assert pair.delta + pair.gamma == 1
        assert pair.delta == Fraction(sizes[pair.p], sizes[pair.p] + sizes[pair.q])


# -- generation ----------------------------------------------------------------

def test_generate_weights():
    plan = kmfos_plan((3, 1), 8, 4)
    rows = kmfos_generate([np.zeros((3, 2)), np.ones((1, 2))], plan, seed=0)
    assert rows.shape == (4, 2)
    np.testing.assert_array_equal(rows, 0.25)


def test_generate_equal_sizes_midpoint():
    a = np.array([[0.0, 2.0]])
    b = np.array([[4.0, -2.0]])
    plan = kmfos_plan((1, 1), 5, 2)
    rows = kmfos_generate([a, b], plan, seed=0)
    np.testing.assert_array_equal(rows, np.tile([2.0, 0.0], (3, 1)))


def test_generate_convex_sweep():
    rng = np.random.default_rng(0)
    for trial in range(1000):
        m = int(rng.integers(1, 5))
        sizes = tuple(int(s) for s in rng.integers(1, 4, size=2))
        groups = [rng.standard_normal((s, m)) * 10 ** rng.uniform(-3, 3) for s in sizes]
        plan = kmfos_plan(sizes, sum(sizes) + 1, sum(sizes))
        r = kmfos_generate(groups, plan, seed=trial)
        lo = np.minimum(groups[0].min(0), groups[1].min(0))
        hi = np.maximum(groups[0].max(0), groups[1].max(0))
        assert np.all(r >= lo) and np.all(r <= hi)


def test_generate_rows_on_segment():
    rng = np.random.default_rng(8)
    a = rng.standard_normal((4, 3))
    b = rng.standard_normal((2, 3))
    plan = kmfos_plan((4, 2), 100, 6)
    r = kmfos_generate([a, b], plan, seed=1)
    # every row must equal 2/3 * a_i + 1/3 * b_j for some (i, j)
    cands = np.array([2 / 3 * ai + 1 / 3 * bj for ai in a for bj in b])
    dist = np.abs(r[:, None, :] - cands[None]).max(-1).min(1)
    assert dist.max() < 1e-12


# -- CLNI ----------------------------------------------------------------------

def test_clni_isolated_defect_removed():
    X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0], [5.0], [2.5]])
    y = np.array([0, 0, 0, 0, 0, 0, 1])
    rep = clni_filter(X, y, 5)
    assert not rep.keep_mask[6]
    assert rep.removed_by_class == (0, 1)


def test_clni_homogeneous_keeps_all():
    X = np.random.default_rng(0).standard_normal((30, 2))
    rep = clni_filter(X, np.zeros(30, dtype=int), 5)
    assert rep.keep_mask.all()


def test_clni_1d_example():
    X = np.array([[0.0], [1.0], [2.0], [3.0], [10.0]])
    y = np.array([0, 0, 0, 0, 1])
    for kn in (1, 2, 3, 4):
        np.testing.assert_array_equal(clni_filter(X, y, kn).keep_mask, clni_oracle(X, y, kn))
    assert clni_filter(X, y, 3).keep_mask.tolist() == [True] * 4 + [False]


def test_clni_matches_oracle_random():
    rng = np.random.default_rng(21)
    for _ in range(5):
        X = rng.standard_normal((200, 3))
        y = (rng.random(200) < 0.3).astype(int)
        kn = int(rng.integers(1, 21))
        np.testing.assert_array_equal(clni_filter(X, y, kn).keep_mask, clni_oracle(X, y, kn))


def test_clni_ties_resolved_by_index():
    rng = np.random.default_rng(4)
    X = rng.integers(0, 3, size=(60, 2)).astype(float)  # heavy duplication
    y = rng.integers(0, 2, 60)
    for kn in (1, 3, 4, 7):
        np.testing.assert_array_equal(clni_filter(X, y, kn).keep_mask, clni_oracle(X, y, kn))


def test_clni_errors():
    with pytest.raises(ValueError):
        clni_filter(np.zeros((4, 1)), [0, 1, 0, 1], 4)
    with pytest.raises(ValueError):
        clni_filter(np.zeros((4, 1)), [0, 1, 0, 1], 0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), kn=st.integers(1, 7))
def test_clni_separated_classes_untouched(seed, kn):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0, 1, size=(kn + 3, 2))
    b = rng.uniform(0, 1, size=(kn + 5, 2)) + [5.0, 0.0]
    X = np.vstack([a, b])
    y = np.array([0] * len(a) + [1] * len(b))
    assert clni_filter(X, y, kn).keep_mask.all()


def test_clni_multiple_passes():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((80, 2))
    y = (X[:, 0] + 0.8 * rng.standard_normal(80) > 0).astype(int)
    once = clni_filter(X, y, 5)
    many = clni_filter(X, y, 5, passes=10)
    assert np.all(many.keep_mask <= once.keep_mask)
    survivors = np.flatnonzero(many.keep_mask)
    if many.passes < 10:
        assert clni_filter(X[survivors], y[survivors], 5).keep_mask.all()


# -- pipeline ------------------------------------------------------------------

def blobs(n0=40, n1=10, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.standard_normal((n0, 2)), rng.standard_normal((n1, 2)) * 0.7 + [2.5, 2.5]])
    return Dataset(X, [0] * n0 + [1] * n1, ("x", "y"), "blobs")


def test_kmfos_balances_before_filter():
    res = kmfos(blobs(), 3, 5, seed=0)
    assert res.counts_before_filter == (40, 40)
    assert len(res.synthetic) == 30
    r0, r1 = res.filter.removed_by_class
    assert res.dataset.n_clean == 40 - r0 and res.dataset.n_defective == 40 - r1
    lo, hi = blobs().features[40:].min(0), blobs().features[40:].max(0)
    assert np.all(res.synthetic >= lo) and np.all(res.synthetic <= hi)


def test_kmfos_already_balanced():
    res = kmfos(blobs(20, 20), 2, 5, seed=0)
    assert len(res.synthetic) == 0
    assert res.counts_before_filter == (20, 20)


def test_kmfos_deterministic():
    a = kmfos_oversample(blobs(), 3, 5, seed=12)
    b = kmfos_oversample(blobs(), 3, 5, seed=12)
    assert a.features.tobytes() == b.features.tobytes()
    assert a.labels.tobytes() == b.labels.tobytes()


@pytest.mark.parametrize("k", [1, 11])
def test_kmfos_bad_k(k):
    with pytest.raises(ValueError):
        kmfos(blobs(), k, 5, seed=0)


def test_kmfos_requires_minority():
    D = Dataset(np.random.default_rng(0).standard_normal((10, 2)), [0] * 10, ("a", "b"))
    with pytest.raises(ValueError):
        kmfos(D, 2, 3)
