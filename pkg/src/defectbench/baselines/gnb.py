from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._common import check_binary


@dataclass(frozen=True, eq=False)
class GaussianNbModel:
    priors: np.ndarray  # (2,)
    means: np.ndarray  # (2, m)
    variances: np.ndarray  # (2, m)
    var_floor: float


def gnb_fit(X, y, floor_scale: float = 1e-9) -> GaussianNbModel:
    X = np.asarray(X, dtype=np.float64)
    y = check_binary(y)
    floor = floor_scale * float(X.var(axis=0).max())
    if floor <= 0:
        floor = floor_scale
    means = np.vstack([X[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.vstack([X[y == c].var(axis=0) for c in (0, 1)])
    priors = np.array([np.mean(y == 0), np.mean(y == 1)])
    return GaussianNbModel(priors, means, np.maximum(variances, floor), floor)


def gnb_joint_log_likelihood(model: GaussianNbModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    out = np.empty((len(X), 2))
    for c in (0, 1):
        var = model.variances[c]
        out[:, c] = (np.log(model.priors[c])
                     - 0.5 * np.sum(np.log(2 * np.pi * var))
                     - 0.5 * (((X - model.means[c]) ** 2) / var).sum(axis=1))
    return out


def gnb_log_odds(model: GaussianNbModel, X) -> np.ndarray:
    """log P(1|x) - log P(0|x)."""
    jll = gnb_joint_log_likelihood(model, X)
    return jll[:, 1] - jll[:, 0]


def gnb_posterior(model: GaussianNbModel, X) -> np.ndarray:
    jll = gnb_joint_log_likelihood(model, X)
    jll -= jll.max(axis=1, keepdims=True)
    p = np.exp(jll)
    return p / p.sum(axis=1, keepdims=True)
