"""Online sequential extreme learning machine (single hidden layer, sigmoid, one output).

The hidden map (input weights, biases) is drawn once and frozen. Output weights
start from a ridge-regularised least-squares solve on an initial block, and each
later chunk of c rows is absorbed with a Woodbury update that inverts only a
c x c matrix:

    K <- K - K G^T (I + G K G^T)^-1 G K
    w <- w + K G^T (t - G w)

so after any sequence of chunks the weights equal the batch solution on every
row seen so far.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import linalg
from scipy.special import expit


class OselmSolveError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class OselmModel:
    input_weights: np.ndarray  # m x b
    biases: np.ndarray  # b
    output_weights: np.ndarray  # b
    K: np.ndarray  # b x b, inverse of (G^T G + ridge I) over all rows seen
    seen: int
    ridge: float
    activation: str = "sigmoid"

    @property
    def n_hidden(self) -> int:
        return self.input_weights.shape[1]

    @property
    def n_inputs(self) -> int:
        return self.input_weights.shape[0]


def hidden_layer(model_or_weights, X, biases=None) -> np.ndarray:
    if biases is None:
        weights, biases = model_or_weights.input_weights, model_or_weights.biases
    else:
        weights = model_or_weights
    return expit(np.asarray(X, dtype=np.float64) @ weights + biases)


def _check_inputs(model: OselmModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_inputs:
        raise ValueError(f"expected {model.n_inputs} input columns, got shape {X.shape}")
    return X


def oselm_init(X0, t0, n_hidden: int, seed=None, ridge: float = 1e-8) -> OselmModel:
    X0 = np.asarray(X0, dtype=np.float64)
    t0 = np.asarray(t0, dtype=np.float64)
    d0, m = X0.shape
    if n_hidden < 1:
        raise ValueError("need at least one hidden unit")
    if d0 < n_hidden:
        raise ValueError(f"initial block has {d0} rows, needs at least n_hidden={n_hidden}")
    if t0.shape != (d0,):
        raise ValueError("targets must have one entry per initial row")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights = rng.uniform(-1.0, 1.0, size=(m, n_hidden))
    biases = rng.uniform(-1.0, 1.0, size=n_hidden)

    G = hidden_layer(weights, X0, biases)
    A = G.T @ G + ridge * np.eye(n_hidden)
    try:
        K = linalg.cho_solve(linalg.cho_factor(A), np.eye(n_hidden))
    except linalg.LinAlgError as exc:
        raise OselmSolveError(f"initial Gram matrix is singular: {exc}") from None
    K = 0.5 * (K + K.T)
    return OselmModel(weights, biases, K @ (G.T @ t0), K, d0, ridge)


def oselm_update(model: OselmModel, X1, t1) -> OselmModel:
    X1 = _check_inputs(model, X1)
    t1 = np.asarray(t1, dtype=np.float64)
    c = X1.shape[0]
    if t1.shape != (c,):
        raise ValueError("targets must have one entry per row")
    if c == 0:
        return model
    G = hidden_layer(model, X1)
    w, K = model.output_weights, model.K
    KG = K @ G.T
    S = np.eye(c) + G @ KG
    try:
        K = K - KG @ linalg.solve(S, KG.T, assume_a="pos")
    except linalg.LinAlgError as exc:
        raise OselmSolveError(f"chunk update failed: {exc}") from None
    K = 0.5 * (K + K.T)
    w = w + K @ (G.T @ (t1 - G @ w))
    return replace(model, output_weights=w, K=K, seen=model.seen + c)


def oselm_scores(model: OselmModel, X) -> np.ndarray:
    return hidden_layer(model, _check_inputs(model, X)) @ model.output_weights


def oselm_predict(model: OselmModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Return (scores, labels); label 1 iff score >= 0.5."""
    scores = oselm_scores(model, X)
    return scores, (scores >= 0.5).astype(np.int64)


def default_hidden_units(n_inputs: int) -> int:
    return max(1, int(np.floor(1.75 * n_inputs + 0.5)))


def oselm_fit(X, y, seed=None, n_hidden: int | None = None, chunk: int = 50,
              ridge: float = 1e-8) -> OselmModel:
    """Shuffle, solve on an initial block of ~1.5 x hidden units, then stream the rest."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rng = np.random.default_rng(seed)
    b = default_hidden_units(X.shape[1]) if n_hidden is None else n_hidden
    if len(X) < b:
        raise ValueError(f"{len(X)} training rows cannot support {b} hidden units")
    order = rng.permutation(len(X))
    X, y = X[order], y[order]
    d0 = min(len(X), max(b, int(np.floor(1.5 * b + 0.5))))
    model = oselm_init(X[:d0], y[:d0], b, rng, ridge)
    for start in range(d0, len(X), chunk):
        model = oselm_update(model, X[start:start + chunk], y[start:start + chunk])
    return model


# -- snapshots -----------------------------------------------------------------

_ARRAYS = ("input_weights", "biases", "output_weights", "K")


def save_model(model: OselmModel, path: str | Path) -> None:
    meta = {"seen": model.seen, "ridge": model.ridge, "activation": model.activation}
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta)),
                 **{k: getattr(model, k) for k in _ARRAYS})


def load_model(path: str | Path) -> OselmModel:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        return OselmModel(**{k: data[k] for k in _ARRAYS}, seen=int(meta["seen"]),
                          ridge=float(meta["ridge"]), activation=meta["activation"])
