"""Original (stratified 5-fold) and oversampled (10-fold x KMFOS grid) protocols.

Every fold fits its own standardise+PCA transform on the training rows only;
KMFOS then runs in the reduced space, again on training rows only. Each task
draws its randomness from a seed hashed out of (master seed, dataset, fold,
k, kn, classifier), so results do not depend on execution order.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..baselines import gnb_fit, logreg_fit, predict, rf_fit, svm_fit
from ..dataset import Dataset, preprocess_apply, preprocess_fit, stratified_kfold
from ..metrics import UndefinedMetricError, balanced_accuracy, confusion, recall
from ..oselm import OselmModel, oselm_fit, oselm_predict
from ..resampling import kmfos
from .config import ExperimentConfig
from .fetch import ingest

log = logging.getLogger(__name__)

RECORD_FIELDS = ("dataset", "classifier", "condition", "k", "kn", "fold", "recall",
                 "balanced_accuracy", "wall_secs")
SKIP_FIELDS = ("dataset", "classifier", "condition", "k", "kn", "fold", "reason")
DISPLAY_NAMES = {"svm": "SVM", "logreg": "Logistic Regression", "rf": "Random Forest",
                 "nb": "Naive Bayes", "oselm": "OS-ELM"}


def derive_seed(*parts) -> int:
    digest = hashlib.sha256("|".join(map(str, parts)).encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def fit_classifier(name: str, X, y, seed: int, options: dict | None = None):
    opts = dict(options or {})
    if name == "svm":
        return svm_fit(X, y, **opts)
    if name == "logreg":
        return logreg_fit(X, y, **opts)
    if name == "rf":
        return rf_fit(X, y, seed=seed, **opts)
    if name == "nb":
        return gnb_fit(X, y, **opts)
    if name == "oselm":
        return oselm_fit(X, y, seed=seed, **opts)
    raise ValueError(f"unknown classifier {name!r}")


def predict_labels(model, X) -> np.ndarray:
    if isinstance(model, OselmModel):
        return oselm_predict(model, X)[1]
    return predict(model, X)


@dataclass(frozen=True)
class RunRecord:
    dataset: str
    classifier: str
    condition: str
    k: int | None
    kn: int | None
    fold: int
    recall: float
    balanced_accuracy: float
    wall_secs: float | None = None

    def key(self) -> tuple:
        return (self.dataset, self.classifier, self.condition,
                -1 if self.k is None else self.k, -1 if self.kn is None else self.kn, self.fold)


@dataclass(frozen=True)
class SkippedRun:
    dataset: str
    classifier: str
    condition: str
    k: int | None
    kn: int | None
    fold: int
    reason: str

    key = RunRecord.key


@dataclass
class RunLog:
    records: list[RunRecord] = field(default_factory=list)
    skipped: list[SkippedRun] = field(default_factory=list)

    def extend(self, other: "RunLog") -> "RunLog":
        self.records.extend(other.records)
        self.skipped.extend(other.skipped)
        return self

    def sorted(self) -> "RunLog":
        return RunLog(sorted(self.records, key=RunRecord.key),
                      sorted(self.skipped, key=SkippedRun.key))


def _evaluate(cfg, log_, name, condition, k, kn, fold, train: Dataset, Xte, yte):
    for clf in cfg.classifiers:
        seed = derive_seed(cfg.seed, name, condition, fold, k, kn, clf)
        start = time.perf_counter()
        model = fit_classifier(clf, train.features, train.labels, seed,
                               cfg.classifier_options.get(clf))
        cm = confusion(yte, predict_labels(model, Xte))
        try:
            rec, bal = recall(cm), balanced_accuracy(cm)
        except UndefinedMetricError as exc:
            log_.skipped.append(SkippedRun(name, clf, condition, k, kn, fold, str(exc)))
            continue
        wall = time.perf_counter() - start if cfg.record_wall_time else None
        log_.records.append(RunRecord(name, clf, condition, k, kn, fold, rec, bal, wall))


def _skip_all(cfg, log_, name, condition, k, kn, fold, reason):
    log.info("%s %s fold %d k=%s kn=%s skipped: %s", name, condition, fold, k, kn, reason)
    for clf in cfg.classifiers:
        log_.skipped.append(SkippedRun(name, clf, condition, k, kn, fold, reason))


def _fold_split(cfg, D: Dataset, train_idx, test_idx):
    P = preprocess_fit(D.features[train_idx], cfg.variance_target)
    names = tuple(f"pc{i + 1}" for i in range(P.n_components))
    train = Dataset(preprocess_apply(P, D.features[train_idx]), D.labels[train_idx], names, D.name)
    return train, preprocess_apply(P, D.features[test_idx]), D.labels[test_idx]


def _both_classes(labels) -> bool:
    return 0 < int(np.sum(labels)) < len(labels)


def run_original(cfg: ExperimentConfig, D: Dataset) -> RunLog:
    out = RunLog()
    folds = stratified_kfold(D.labels, cfg.folds_original,
                             derive_seed(cfg.seed, D.name, "original", "folds"))
    for fold, train_idx, test_idx in folds.splits():
        if not _both_classes(D.labels[train_idx]):
            _skip_all(cfg, out, D.name, "original", None, None, fold,
                      "training folds lack one class")
            continue
        train, Xte, yte = _fold_split(cfg, D, train_idx, test_idx)
        log.info("%s original fold %d: %d train rows, %d components", D.name, fold,
                 train.n, train.d)
        _evaluate(cfg, out, D.name, "original", None, None, fold, train, Xte, yte)
    return out


def run_oversampled(cfg: ExperimentConfig, D: Dataset) -> RunLog:
    out = RunLog()
    folds = stratified_kfold(D.labels, cfg.folds_oversampled,
                             derive_seed(cfg.seed, D.name, "oversampled", "folds"))
    for fold, train_idx, test_idx in folds.splits():
        if not _both_classes(D.labels[train_idx]):
            for k, kn in cfg.grid:
                _skip_all(cfg, out, D.name, "oversampled", k, kn, fold,
                          "training folds lack one class")
            continue
        train, Xte, yte = _fold_split(cfg, D, train_idx, test_idx)
        for k, kn in cfg.grid:
            if k > train.n_defective:
                _skip_all(cfg, out, D.name, "oversampled", k, kn, fold,
                          f"k={k} exceeds {train.n_defective} defective training rows")
                continue
            if kn >= 2 * train.n_clean:
                _skip_all(cfg, out, D.name, "oversampled", k, kn, fold,
                          f"kn={kn} too large for the oversampled training set")
                continue
            result = kmfos(train, k, kn, derive_seed(cfg.seed, D.name, "kmfos", fold, k, kn),
                           clni_passes=cfg.clni_passes)
            log.info("%s oversampled fold %d k=%d kn=%d: %d synthetic, removed %s", D.name,
                     fold, k, kn, len(result.synthetic), result.filter.removed_by_class)
            if not _both_classes(result.dataset.labels):
                _skip_all(cfg, out, D.name, "oversampled", k, kn, fold,
                          "noise filtering removed an entire class")
                continue
            _evaluate(cfg, out, D.name, "oversampled", k, kn, fold, result.dataset, Xte, yte)
    return out


def run_benchmark(cfg: ExperimentConfig, datasets: list[str] | None = None,
                  protocol: str | None = None) -> RunLog:
    protocol = protocol or cfg.protocol
    entries = [cfg.dataset(n) for n in datasets] if datasets else list(cfg.datasets)
    out = RunLog()
    for entry in entries:
        D = ingest(cfg, entry)
        log.info("%s: n=%d d=%d defective=%d", D.name, D.n, D.d, D.n_defective)
        if protocol in ("original", "both"):
            out.extend(run_original(cfg, D))
        if protocol in ("oversampled", "both"):
            out.extend(run_oversampled(cfg, D))
    return out.sorted()


# -- persistence ---------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_records(records, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in sorted(records, key=RunRecord.key):
            w.writerow([_cell(getattr(r, f)) for f in RECORD_FIELDS])


def write_skipped(skipped, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SKIP_FIELDS)
        for s in sorted(skipped, key=SkippedRun.key):
            w.writerow([_cell(getattr(s, f)) for f in SKIP_FIELDS])


def read_records(path: str | Path) -> list[RunRecord]:
    def opt_int(s):
        return int(s) if s != "" else None

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RECORD_FIELDS:
            raise ValueError(f"{path}: expected header {','.join(RECORD_FIELDS)}")
        return [RunRecord(row["dataset"], row["classifier"], row["condition"],
                          opt_int(row["k"]), opt_int(row["kn"]), int(row["fold"]),
                          float(row["recall"]), float(row["balanced_accuracy"]),
                          float(row["wall_secs"]) if row["wall_secs"] else None)
                for row in reader]
