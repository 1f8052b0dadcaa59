"""KMFOS: k-means on the defective rows, pairwise-cluster interpolation, CLNI filtering."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .dataset import Dataset


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


# -- k-means -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClusterModel:
    centers: np.ndarray
    assignment: np.ndarray
    sizes: np.ndarray
    inertia: float
    n_iter: int

    @property
    def k(self) -> int:
        return self.centers.shape[0]


def kmeans_plus_plus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # every point coincides with a chosen center
            idx = int(rng.integers(n))
        chosen.append(idx)
        closest = np.minimum(closest, ((X - X[idx]) ** 2).sum(axis=1))
    return X[chosen].copy()


def _repair_empty(X, centers, assign, d2):
    """Give each empty cluster the point farthest from its current center."""
    k = centers.shape[0]
    sizes = np.bincount(assign, minlength=k)
    for c in np.flatnonzero(sizes == 0):
        own = d2[np.arange(len(X)), assign].copy()
        own[sizes[assign] <= 1] = -1.0  # never empty another cluster
        i = int(np.argmax(own))
        sizes[assign[i]] -= 1
        assign[i] = c
        sizes[c] = 1
        centers[c] = X[i]
        d2[:, c] = ((X - X[i]) ** 2).sum(axis=1)
    return assign


def kmeans(X, k: int, seed=None, max_iter: int = 300, tol: float = 1e-6,
           init: np.ndarray | None = None) -> ClusterModel:
    """Lloyd iterations from k-means++ seeding (or ``init`` centers)."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > n:
        raise ValueError(f"k={k} exceeds the {n} points to cluster")
    rng = _rng(seed)
    centers = kmeans_plus_plus(X, k, rng) if init is None else np.array(init, dtype=np.float64)

    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = _sq_dists(X, centers)
        assign = _repair_empty(X, centers, np.argmin(d2, axis=1), d2)
        new = np.vstack([X[assign == c].mean(axis=0) for c in range(k)])
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        if shift <= tol:
            break

    d2 = _sq_dists(X, centers)
    assign = _repair_empty(X, centers, np.argmin(d2, axis=1), d2)
    inertia = float(d2[np.arange(n), assign].sum())
    return ClusterModel(centers, assign, np.bincount(assign, minlength=k), inertia, n_iter)


# -- quota plan ----------------------------------------------------------------

@dataclass(frozen=True)
class PairQuota:
    p: int
    q: int
    quota: int
    exact: Fraction
    delta: Fraction  # weight on the draw from cluster p
    gamma: Fraction  # weight on the draw from cluster q


@dataclass(frozen=True)
class KmfosPlan:
    pairs: tuple[PairQuota, ...]
    total: int
    sizes: tuple[int, ...]


def kmfos_plan(sizes: Sequence[int], n_clean: int, n_defective: int) -> KmfosPlan:
    """Size-proportional synthetic quotas per cluster pair.

    The exact quota for pair (p, q) is (n_p + n_q) * N / ((k - 1) * N1) with
    N = N0 - N1; these sum to N exactly. Integer quotas are floors, with the
    remainder handed out by descending fractional part (ties: pair order).
    """
    sizes = tuple(int(s) for s in sizes)
    k = len(sizes)
    if k < 2:
        raise ValueError("need at least two clusters to form pairs")
    if min(sizes) < 1:
        raise ValueError(f"cluster sizes must be positive, got {sizes}")
    if sum(sizes) != n_defective:
        raise ValueError(f"cluster sizes sum to {sum(sizes)}, expected N1={n_defective}")
    if n_clean < n_defective:
        raise ValueError("the defective class must be the minority (N0 >= N1)")
    total = n_clean - n_defective

    raw = []
    for p, q in combinations(range(k), 2):
        s = sizes[p] + sizes[q]
        exact = Fraction(s * total, (k - 1) * n_defective)
        raw.append((p, q, exact, exact.numerator // exact.denominator))
    remainder = total - sum(r[3] for r in raw)
    by_fraction = sorted(range(len(raw)), key=lambda i: (-(raw[i][2] - raw[i][3]), i))
    bonus = set(by_fraction[:remainder])

    pairs = tuple(
        PairQuota(p, q, fl + (i in bonus), exact,
                  Fraction(sizes[p], sizes[p] + sizes[q]), Fraction(sizes[q], sizes[p] + sizes[q]))
        for i, (p, q, exact, fl) in enumerate(raw))
    return KmfosPlan(pairs, total, sizes)


def kmfos_generate(groups: Sequence[np.ndarray], plan: KmfosPlan, seed=None) -> np.ndarray:
    """Interpolate quota-many rows r = delta*i + gamma*j per cluster pair.

    i and j are drawn uniformly with replacement from clusters p and q.
    """
    rng = _rng(seed)
    groups = [np.asarray(g, dtype=np.float64) for g in groups]
    if tuple(len(g) for g in groups) != plan.sizes:
        raise ValueError("cluster groups do not match the plan's sizes")
    width = groups[0].shape[1]
    out = [np.empty((0, width))]
    for pair in plan.pairs:
        if pair.quota == 0:
            continue
        a = groups[pair.p][rng.integers(len(groups[pair.p]), size=pair.quota)]
        b = groups[pair.q][rng.integers(len(groups[pair.q]), size=pair.quota)]
        r = float(pair.delta) * a + float(pair.gamma) * b
        # rounding can leave r an ulp outside the segment
        out.append(np.clip(r, np.minimum(a, b), np.maximum(a, b)))
    return np.vstack(out)


# -- CLNI ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FilterReport:
    keep_mask: np.ndarray
    removed_by_class: tuple[int, int]
    kn: int
    passes: int = 1


def _noisy(X: np.ndarray, y: np.ndarray, kn: int, block: int = 128) -> np.ndarray:
    """True where more than half of the kn nearest neighbours carry the other label.

    Neighbours exclude the point itself; equal distances go to the lower index.
    """
    n = X.shape[0]
    noisy = np.zeros(n, dtype=bool)
    for start in range(0, n, block):
        rows = np.arange(start, min(start + block, n))
        D = ((X[rows, None, :] - X[None, :, :]) ** 2).sum(axis=2)
        D[np.arange(len(rows)), rows] = np.inf
        kth = np.partition(D, kn - 1, axis=1)[:, kn - 1:kn]
        closer = D < kth
        tied = D == kth
        need = kn - closer.sum(axis=1, keepdims=True)
        neighbours = closer | (tied & (np.cumsum(tied, axis=1) <= need))
        opposite = (neighbours & (y[None, :] != y[rows, None])).sum(axis=1)
        noisy[rows] = 2 * opposite > kn
    return noisy


def clni_filter(X, y, kn: int, passes: int = 1) -> FilterReport:
    """Flag noise instances against the current set, then drop them all at once.

    ``passes > 1`` repeats on the survivors until nothing is removed.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = X.shape[0]
    if kn < 1:
        raise ValueError("kn must be at least 1")
    if kn >= n:
        raise ValueError(f"kn={kn} needs more than {n} instances")
    keep = np.ones(n, dtype=bool)
    done = 0
    for done in range(1, passes + 1):
        alive = np.flatnonzero(keep)
        if kn >= len(alive):
            break
        noisy = _noisy(X[alive], y[alive], kn)
        if not noisy.any():
            break
        keep[alive[noisy]] = False
    removed = ~keep
    return FilterReport(keep, (int((removed & (y == 0)).sum()), int((removed & (y == 1)).sum())),
                        kn, done)


# -- pipeline ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KmfosResult:
    dataset: Dataset
    clusters: ClusterModel
    plan: KmfosPlan
    synthetic: np.ndarray
    counts_before_filter: tuple[int, int]  # (label 0, label 1)
    filter: FilterReport


def kmfos(D: Dataset, k: int, kn: int, seed=None, clni_passes: int = 1) -> KmfosResult:
    n1, n0 = D.n_defective, D.n_clean
    if n1 == 0:
        raise ValueError("no defective instances to oversample")
    if n0 == 0:
        raise ValueError("no non-defective instances")
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n1:
        raise ValueError(f"k={k} exceeds the {n1} defective instances")
    if n0 < n1:
        raise ValueError("the defective class must be the minority (N0 >= N1)")
    rng = _rng(seed)

    minority = D.features[D.labels == 1]
    clusters = kmeans(minority, k, rng)
    plan = kmfos_plan(clusters.sizes, n0, n1)
    groups = [minority[clusters.assignment == c] for c in range(k)]
    synthetic = kmfos_generate(groups, plan, rng)

    X = np.vstack([D.features, synthetic])
    y = np.concatenate([D.labels, np.ones(len(synthetic), dtype=np.int64)])
    before = (int((y == 0).sum()), int((y == 1).sum()))
    report = clni_filter(X, y, kn, passes=clni_passes)
    out = Dataset(X[report.keep_mask], y[report.keep_mask], D.feature_names, f"{D.name}+kmfos")
    return KmfosResult(out, clusters, plan, synthetic, before, report)


def kmfos_oversample(D: Dataset, k: int, kn: int, seed=None, clni_passes: int = 1) -> Dataset:
    return kmfos(D, k, kn, seed, clni_passes).dataset
