from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from ._common import ConvergenceWarning, check_binary


@dataclass(frozen=True, eq=False)
class LogRegModel:
    weights: np.ndarray
    bias: float
    l2: float
    converged: bool = True
    n_iter: int = 0


def logreg_objective(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    """Mean negative log-likelihood plus (l2/2)|w|^2; ``params`` is (w..., b)."""
    w, b = params[:-1], params[-1]
    z = X @ w + b
    nll = -(y * log_expit(z) + (1 - y) * log_expit(-z)).mean()
    return float(nll + 0.5 * l2 * (w @ w))


def logreg_gradient(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> np.ndarray:
    w, b = params[:-1], params[-1]
    r = expit(X @ w + b) - y
    n = len(y)
    return np.concatenate([X.T @ r / n + l2 * w, [r.sum() / n]])


def _hessian(params, X, l2):
    w, b = params[:-1], params[-1]
    p = expit(X @ w + b)
    s = p * (1 - p) / len(X)
    Xa = np.hstack([X, np.ones((len(X), 1))])
    H = (Xa * s[:, None]).T @ Xa
    H[:-1, :-1] += l2 * np.eye(X.shape[1])
    return H


def logreg_fit(X, y, l2: float = 1e-4, tol: float = 1e-6, max_iter: int = 500) -> LogRegModel:
    """Damped Newton on the convex objective until max |gradient| <= tol."""
    X = np.asarray(X, dtype=np.float64)
    y = check_binary(y).astype(np.float64)
    params = np.zeros(X.shape[1] + 1)
    f = logreg_objective(params, X, y, l2)
    g = logreg_gradient(params, X, y, l2)
    it = 0
    for it in range(1, max_iter + 1):
        if np.abs(g).max() <= tol:
            break
        H = _hessian(params, X, l2)
        try:
            step = np.linalg.solve(H + 1e-12 * np.eye(len(params)), g)
        except np.linalg.LinAlgError:
            step = g
        t = 1.0
        while True:
            trial = params - t * step
            f_trial = logreg_objective(trial, X, y, l2)
            if f_trial <= f - 1e-4 * t * (g @ step) or t < 1e-10:
                break
            t *= 0.5
        params, f = trial, f_trial
        g = logreg_gradient(params, X, y, l2)
    converged = bool(np.abs(g).max() <= tol)
    if not converged:
        warnings.warn(f"logistic regression stopped after {max_iter} iterations "
                      f"(|grad| = {np.abs(g).max():.2e})", ConvergenceWarning)
    return LogRegModel(params[:-1].copy(), float(params[-1]), l2, converged, it)


def logreg_scores(model: LogRegModel, X) -> np.ndarray:
    return expit(np.asarray(X, dtype=np.float64) @ model.weights + model.bias)
