"""The four comparison classifiers behind a common fit/predict contract.

Decision rules:
  logistic regression  sigmoid(w.x + b) >= 0.5 -> 1
  Gaussian NB          log P(1|x) > log P(0|x) -> 1 (ties -> 0)
  random forest        more than half the trees vote 1 -> 1 (ties -> 0)
  SVM                  decision value > 0 -> 1
"""

from functools import singledispatch

import numpy as np

from ._common import ConvergenceWarning
from .forest import CartTree, ForestModel, gini, rf_fit, rf_votes
from .gnb import GaussianNbModel, gnb_fit, gnb_log_odds, gnb_posterior
from .logreg import LogRegModel, logreg_fit, logreg_gradient, logreg_objective, logreg_scores
from .svm import SvmModel, rbf_kernel, svm_decision, svm_fit

__all__ = [
    "ConvergenceWarning", "CartTree", "ForestModel", "GaussianNbModel", "LogRegModel", "SvmModel",
    "gini", "gnb_fit", "gnb_log_odds", "gnb_posterior", "logreg_fit", "logreg_gradient",
    "logreg_objective", "logreg_scores", "predict", "rbf_kernel", "rf_fit", "rf_votes",
    "svm_decision", "svm_fit",
]


def _n_features(model) -> int:
    if isinstance(model, LogRegModel):
        return len(model.weights)
    if isinstance(model, GaussianNbModel):
        return model.means.shape[1]
    if isinstance(model, ForestModel):
        return model.n_features
    return model.support_vectors.shape[1]


def _checked(model, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != _n_features(model):
        raise ValueError(f"model expects {_n_features(model)} features, got shape {X.shape}")
    return X


@singledispatch
def predict(model, X) -> np.ndarray:
    raise TypeError(f"no predict rule for {type(model).__name__}")


@predict.register
def _(model: LogRegModel, X):
    return (logreg_scores(model, _checked(model, X)) >= 0.5).astype(np.int64)


@predict.register
def _(model: GaussianNbModel, X):
    return (gnb_log_odds(model, _checked(model, X)) > 0).astype(np.int64)


@predict.register
def _(model: ForestModel, X):
    votes = rf_votes(model, _checked(model, X))
    return (2 * votes > model.n_trees).astype(np.int64)


@predict.register
def _(model: SvmModel, X):
    return (svm_decision(model, _checked(model, X)) > 0).astype(np.int64)
