"""Random forest of unpruned Gini CART trees with bootstrap bagging."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._common import check_binary

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _splitmix(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _grow(X, y, sample, mtry, state):
    n = sample.shape[0]
    m = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    counts = np.zeros((cap, 2), np.int64)

    work = sample.copy()
    buf = np.empty(n, np.int64)
    vals = np.empty(n)
    feats = np.arange(m)
    st_node = np.empty(cap, np.int64)
    st_lo = np.empty(cap, np.int64)
    st_hi = np.empty(cap, np.int64)
    st_node[0], st_lo[0], st_hi[0] = 0, 0, n
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        node, lo, hi = st_node[sp], st_lo[sp], st_hi[sp]
        size = hi - lo
        c1 = 0
        for i in range(lo, hi):
            c1 += y[work[i]]
        c0 = size - c1
        counts[node, 0] = c0
        counts[node, 1] = c1
        if c0 == 0 or c1 == 0 or size < 2:
            continue

        best_f = -1
        best_score = np.inf
        best_thr = 0.0
        usable = 0
        for t in range(m):
            if usable >= mtry:
                break
            r = t + np.int64(_splitmix(state) % np.uint64(m - t))
            feats[t], feats[r] = feats[r], feats[t]
            f = feats[t]
            for i in range(size):
                vals[i] = X[work[lo + i], f]
            order = np.argsort(vals[:size])
            if vals[order[0]] == vals[order[size - 1]]:
                continue
            usable += 1
            l0 = 0
            l1 = 0
            for i in range(size - 1):
                if y[work[lo + order[i]]] == 1:
                    l1 += 1
                else:
                    l0 += 1
                a = vals[order[i]]
                b = vals[order[i + 1]]
                if a < b:
                    nl = i + 1
                    nr = size - nl
                    r0 = c0 - l0
                    r1 = c1 - l1
                    score = (nl - (l0 * l0 + l1 * l1) / nl) + (nr - (r0 * r0 + r1 * r1) / nr)
                    if score < best_score:
                        best_score = score
                        best_f = f
                        thr = 0.5 * (a + b)
                        best_thr = thr if thr < b else a
        if best_f < 0:
            continue

        nl = 0
        nr = 0
        for i in range(lo, hi):
            w = work[i]
            if X[w, best_f] <= best_thr:
                work[lo + nl] = w
                nl += 1
            else:
                buf[nr] = w
                nr += 1
        for i in range(nr):
            work[lo + nl + i] = buf[i]

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        st_node[sp], st_lo[sp], st_hi[sp] = n_nodes + 1, lo + nl, hi
        st_node[sp + 1], st_lo[sp + 1], st_hi[sp + 1] = n_nodes, lo, lo + nl
        sp += 2
        n_nodes += 2

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), counts[:n_nodes].copy())


@njit(cache=True)
def _apply(X, feature, threshold, left, right):
    out = np.empty(X.shape[0], np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@dataclass(frozen=True, eq=False)
class CartTree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 2) class votes reaching each node

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, X) -> np.ndarray:
        leaves = _apply(np.ascontiguousarray(X, dtype=np.float64), self.feature,
                        self.threshold, self.left, self.right)
        c = self.counts[leaves]
        return (c[:, 1] > c[:, 0]).astype(np.int64)


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[CartTree, ...]
    mtry: int
    n_features: int
    oob_score: float | None = None

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def gini(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    p = counts / counts.sum()
    return float(1.0 - (p ** 2).sum())


def tree_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(index)])


def build_tree(X, y, sample: np.ndarray, mtry: int, seed: np.random.SeedSequence) -> CartTree:
    state = seed.generate_state(1, np.uint64)
    return CartTree(*_grow(X, y, sample.astype(np.int64), int(mtry), state))


def rf_fit(X, y, n_trees: int = 100, seed: int = 0, mtry: int | None = None,
           bootstrap: bool = True, compute_oob: bool = False) -> ForestModel:
    """Bagged CART trees; each split scans ceil(sqrt(m)) randomly chosen features.

    If the drawn features are all constant on a node, further features are
    tried until a valid split turns up or every feature has been examined.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = check_binary(y)
    n, m = X.shape
    mtry = int(math.ceil(math.sqrt(m))) if mtry is None else int(mtry)
    trees = []
    oob_votes = np.zeros((n, 2), np.int64)
    for t in range(n_trees):
        boot_seq, split_seq = tree_seed(seed, t).spawn(2)
        sample = np.random.default_rng(boot_seq).integers(n, size=n) if bootstrap else np.arange(n)
        tree = build_tree(X, y, sample, mtry, split_seq)
        trees.append(tree)
        if compute_oob:
            out = np.ones(n, dtype=bool)
            out[sample] = False
            if out.any():
                pred = tree.predict(X[out])
                np.add.at(oob_votes, (np.flatnonzero(out), pred), 1)
    oob = None
    if compute_oob:
        voted = oob_votes.sum(axis=1) > 0
        pred = (oob_votes[:, 1] > oob_votes[:, 0]).astype(np.int64)
        oob = float(np.mean(pred[voted] == y[voted])) if voted.any() else float("nan")
    return ForestModel(tuple(trees), mtry, m, oob)


def rf_votes(model: ForestModel, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    return np.sum([t.predict(X) for t in model.trees], axis=0)
