"""Soft-margin RBF SVM trained by SMO with second-order working-set selection.

Follows the maximal-violating-pair scheme of LIBSVM (Fan, Chen & Lin, 2005)
on a precomputed kernel matrix; no shrinking.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._common import ConvergenceWarning, check_binary

_TAU = 1e-12


@njit(cache=True)
def _smo(K, y, C, tol, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - e'a
    it = 0
    gap = np.inf
    while it < max_iter:
        # i: maximal violator in I_up
        g_max = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * grad[t]
                if v >= g_max:
                    g_max = v
                    i = t
        g_min = np.inf
        j = -1
        obj_min = np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                v = -y[t] * grad[t]
                if v < g_min:
                    g_min = v
                if i >= 0:
                    b = g_max - v
                    if b > 0:
                        a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if a <= 0:
                            a = _TAU
                        o = -(b * b) / a
                        if o <= obj_min:
                            obj_min = o
                            j = t
        gap = g_max - g_min
        if i < 0 or j < 0 or gap < tol:
            break
        it += 1

        a = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if a <= 0:
            a = _TAU
        ai_old = alpha[i]
        aj_old = alpha[j]
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / a
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            delta = (grad[i] - grad[j]) / a
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        di = alpha[i] - ai_old
        dj = alpha[j] - aj_old
        for t in range(n):
            grad[t] += y[t] * (y[i] * K[i, t] * di + y[j] * K[j, t] * dj)

    # offset: average over free vectors, else midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    total = 0.0
    n_free = 0
    for t in range(n):
        yg = y[t] * grad[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            total += yg
    rho = total / n_free if n_free > 0 else 0.5 * (ub + lb)
    return alpha, -rho, it, gap


def rbf_kernel(A, B, g: float) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-g * np.maximum(d2, 0.0))


@dataclass(frozen=True, eq=False)
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for each support vector
    bias: float
    gamma: float
    C: float
    converged: bool = True
    n_iter: int = 0


def svm_fit(X, y, C: float = 1.0, g: float | None = None, tol: float = 1e-3,
            max_passes: int = 10_000) -> SvmModel:
    """Fit the soft-margin dual. ``g`` defaults to 1/m; the iteration cap is max_passes * n."""
    X = np.asarray(X, dtype=np.float64)
    ypm = np.where(check_binary(y) == 1, 1.0, -1.0)
    n, m = X.shape
    g = 1.0 / m if g is None else float(g)
    K = rbf_kernel(X, X, g)
    alpha, bias, n_iter, gap = _smo(K, ypm, float(C), float(tol), int(max_passes) * n)
    converged = bool(gap < tol)
    if not converged:
        warnings.warn(f"SMO hit its iteration bound (violation gap {gap:.2e})", ConvergenceWarning)
    sv = alpha > 0
    return SvmModel(X[sv].copy(), (alpha * ypm)[sv], float(bias), g, float(C), converged, n_iter)


def svm_decision(model: SvmModel, X) -> np.ndarray:
    return rbf_kernel(X, model.support_vectors, model.gamma) @ model.dual_coef + model.bias
