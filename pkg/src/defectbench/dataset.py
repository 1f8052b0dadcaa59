"""Dataset ingestion (ARFF subset, CSV), stratified folds, and z-score + PCA preprocessing."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

DEFAULT_DEFECTIVE_TOKENS = ("Y", "true", "1")
DEFAULT_CLEAN_TOKENS = ("N", "false", "0")
NUMERIC_TYPES = ("numeric", "real", "integer")


class DataFormatError(ValueError):
    """Raised for malformed input files; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    name: str = "dataset"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n, d = X.shape
        if d < 1:
            raise ValueError("dataset needs at least one feature column")
        if n < 2:
            raise ValueError("dataset needs at least two rows")
        if y.shape != (n,):
            raise ValueError(f"labels length {y.shape} does not match {n} feature rows")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain NaN or infinite values")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0 or 1")
        names = tuple(self.feature_names)
        if len(names) != d:
            raise ValueError(f"{len(names)} feature names for {d} columns")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y.astype(np.int64)))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_defective(self) -> int:
        """N1, the minority (label 1) count."""
        return int(self.labels.sum())

    @property
    def n_clean(self) -> int:
        """N0, the majority (label 0) count."""
        return self.n - self.n_defective

    def subset(self, index: np.ndarray, name: str | None = None) -> "Dataset":
        return Dataset(self.features[index], self.labels[index], self.feature_names,
                       self.name if name is None else name)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.name == other.name and self.feature_names == other.feature_names
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels))

    __hash__ = None


def _read_text(text: str | TextIO) -> str:
    return text if isinstance(text, str) else text.read()


def _parse_number(token: str, lineno: int) -> float:
    token = token.strip()
    if token == "?":
        raise DataFormatError("missing value '?' is not supported", lineno)
    try:
        value = float(token)
    except ValueError:
        raise DataFormatError(f"non-numeric token {token!r}", lineno) from None
    if not math.isfinite(value):
        raise DataFormatError(f"non-finite value {token!r}", lineno)
    return value


def _split_name(rest: str, lineno: int) -> tuple[str, str]:
    """Split an @attribute remainder into (name, type-spec), honouring quotes."""
    rest = rest.strip()
    if not rest:
        raise DataFormatError("@attribute without a name", lineno)
    if rest[0] in "'\"":
        end = rest.find(rest[0], 1)
        if end < 0:
            raise DataFormatError("unterminated quoted attribute name", lineno)
        return rest[1:end], rest[end + 1:].strip()
    parts = rest.split(None, 1)
    if len(parts) < 2:
        raise DataFormatError(f"@attribute {parts[0]!r} has no type", lineno)
    return parts[0], parts[1].strip()


def _token_set(tokens: Iterable[str] | str) -> set[str]:
    if isinstance(tokens, str):
        tokens = (tokens,)
    return {t.strip().lower() for t in tokens}


def parse_arff(text: str | TextIO, defective_tokens: Iterable[str] | str = DEFAULT_DEFECTIVE_TOKENS,
               name: str | None = None) -> Dataset:
    """Parse the numeric-features + binary-nominal-class ARFF subset.

    Comment lines (``%``) and blank lines are ignored anywhere. All attributes
    but the last must be numeric; the last must be nominal with exactly two
    values, one of which matches ``defective_tokens`` (case-insensitive).
    """
    positive = _token_set(defective_tokens)
    relation = None
    attributes: list[tuple[str, str, int]] = []
    rows: list[list[float]] = []
    labels: list[int] = []
    class_map: dict[str, int] | None = None
    in_data = False

    for lineno, raw in enumerate(_read_text(text).splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            tokens = line.split(",")
            if len(tokens) != len(attributes):
                raise DataFormatError(
                    f"expected {len(attributes)} values, found {len(tokens)}", lineno)
            rows.append([_parse_number(t, lineno) for t in tokens[:-1]])
            cls = tokens[-1].strip().strip("'\"").lower()
            if cls == "?":
                raise DataFormatError("missing class value '?'", lineno)
            if cls not in class_map:
                raise DataFormatError(f"unknown class token {tokens[-1].strip()!r}", lineno)
            labels.append(class_map[cls])
            continue

        keyword, *rest = line.split(None, 1)
        keyword = keyword.lower()
        rest = rest[0] if rest else ""
        if keyword == "@relation":
            if relation is not None:
                raise DataFormatError("duplicate @relation", lineno)
            relation = rest.strip().strip("'\"") or "relation"
        elif keyword == "@attribute":
            if relation is None:
                raise DataFormatError("@attribute before @relation", lineno)
            attr_name, spec = _split_name(rest, lineno)
            attributes.append((attr_name, spec, lineno))
        elif keyword == "@data":
            if relation is None or len(attributes) < 2:
                raise DataFormatError("@data needs @relation and at least two attributes", lineno)
            for attr_name, spec, at_line in attributes[:-1]:
                if spec.lower() not in NUMERIC_TYPES:
                    raise DataFormatError(
                        f"attribute {attr_name!r} must be numeric, got {spec!r}", at_line)
            cls_name, spec, at_line = attributes[-1]
            if not (spec.startswith("{") and spec.endswith("}")):
                raise DataFormatError(f"class attribute {cls_name!r} must be nominal", at_line)
            values = [v.strip().strip("'\"") for v in spec[1:-1].split(",")]
            if len(values) != 2 or not all(values):
                raise DataFormatError(
                    f"class attribute {cls_name!r} must declare exactly two values", at_line)
            hits = [v.lower() in positive for v in values]
            if sum(hits) != 1:
                raise DataFormatError(
                    f"exactly one class value of {values} must match defective tokens "
                    f"{sorted(positive)}", at_line)
            class_map = {v.lower(): int(h) for v, h in zip(values, hits)}
            in_data = True
        else:
            raise DataFormatError(f"unexpected header line {line[:40]!r}", lineno)

    if not in_data:
        raise DataFormatError("no @data section")
    feature_names = tuple(a[0] for a in attributes[:-1])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(feature_names))
    return Dataset(X, np.array(labels, dtype=np.int64), feature_names,
                   name if name is not None else relation)


def parse_csv(text: str | TextIO, label_column: str,
              positive_token: Iterable[str] | str = DEFAULT_DEFECTIVE_TOKENS,
              negative_token: Iterable[str] | str = DEFAULT_CLEAN_TOKENS,
              name: str = "dataset") -> Dataset:
    """Parse a headed CSV; ``label_column`` is removed from the features."""
    positive = _token_set(positive_token)
    negative = _token_set(negative_token)
    reader = csv.reader(io.StringIO(_read_text(text)))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("empty file: missing header", 1) from None
    header = [h.strip() for h in header]
    if label_column not in header:
        raise DataFormatError(f"label column {label_column!r} not in header", 1)
    li = header.index(label_column)
    feature_names = tuple(h for i, h in enumerate(header) if i != li)
    if not feature_names:
        raise DataFormatError("no feature columns besides the label", 1)

    rows, labels = [], []
    for cells in reader:
        lineno = reader.line_num
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != len(header):
            raise DataFormatError(f"ragged row: {len(cells)} cells, header has {len(header)}",
                                  lineno)
        token = cells[li].strip().lower()
        if token in positive:
            labels.append(1)
        elif token in negative:
            labels.append(0)
        else:
            raise DataFormatError(f"unknown class token {cells[li].strip()!r}", lineno)
        rows.append([_parse_number(c, lineno) for i, c in enumerate(cells) if i != li])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(feature_names))
    return Dataset(X, np.array(labels, dtype=np.int64), feature_names, name)


def write_csv(dataset: Dataset, out: str | Path | TextIO, label_column: str = "defective") -> None:
    """Write features with 17 significant digits so a re-parse is bit-exact."""
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="") as fh:
            write_csv(dataset, fh, label_column)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([*dataset.feature_names, label_column])
    for row, label in zip(dataset.features, dataset.labels):
        writer.writerow([format(v, ".17g") for v in row] + [str(int(label))])


def load_dataset(path: str | Path, fmt: str = "arff", name: str | None = None,
                 defective_tokens: Iterable[str] | str = DEFAULT_DEFECTIVE_TOKENS,
                 label_column: str | None = None) -> Dataset:
    path = Path(path)
    text = path.read_text(encoding="utf-8", errors="replace")
    name = name if name is not None else path.stem
    if fmt == "arff":
        return parse_arff(text, defective_tokens, name=name)
    if fmt == "csv":
        if label_column is None:
            raise ValueError("csv datasets need a label_column")
        return parse_csv(text, label_column, defective_tokens, name=name)
    raise ValueError(f"unknown dataset format {fmt!r}")


# -- folds -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_of: np.ndarray
    n_folds: int

    def test_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def splits(self):
        for f in range(self.n_folds):
            yield f, self.train_index(f), self.test_index(f)


def stratified_kfold(labels, n_folds: int, seed) -> FoldAssignment:
    """Seeded shuffle within each class, then round-robin over folds.

    The round-robin offset carries over from class 0 to class 1 so fold sizes
    stay within one of each other (and F = n gives leave-one-out).
    """
    y = np.asarray(labels)
    n = len(y)
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    if n_folds > n:
        raise ValueError(f"{n_folds} folds for only {n} rows")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    offset = 0
    for c in (0, 1):
        members = np.flatnonzero(y == c)
        if len(members) == 0:
            raise ValueError(f"class {c} is empty")
        members = members[rng.permutation(len(members))]
        fold_of[members] = (offset + np.arange(len(members))) % n_folds
        offset = (offset + len(members)) % n_folds
    return FoldAssignment(_frozen(fold_of), n_folds)


# -- preprocessing -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Preprocessor:
    means: np.ndarray
    stddevs: np.ndarray
    components: np.ndarray  # m x d, orthonormal rows
    explained_ratio: np.ndarray
    eigenvalues: np.ndarray  # covariance eigenvalues of the kept components
    constant: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def preprocess_fit(X, variance_target: float = 0.90) -> Preprocessor:
    """Z-score the columns, then keep the fewest principal axes reaching ``variance_target``."""
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least two rows to fit a preprocessor")
    if not 0.0 < variance_target <= 1.0:
        raise ValueError("variance_target must be in (0, 1]")
    means = X.mean(axis=0)
    std = X.std(axis=0, ddof=1)
    constant = std <= 1e-12 * np.maximum(1.0, np.abs(means))
    if constant.all():
        raise ValueError("all features are constant; nothing to decompose")
    std = np.where(constant, 1.0, std)
    Z = (X - means) / std
    Z[:, constant] = 0.0

    cov = Z.T @ Z / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order].T
    # sign convention: largest-magnitude loading positive
    pivot = np.argmax(np.abs(evecs), axis=1)
    evecs *= np.sign(evecs[np.arange(d), pivot])[:, None]

    ratio = evals / evals.sum()
    cumulative = np.cumsum(ratio)
    m = int(np.searchsorted(cumulative, variance_target - 1e-12) + 1)
    m = min(m, d)
    return Preprocessor(_frozen(means), _frozen(std), _frozen(evecs[:m]),
                        _frozen(ratio[:m]), _frozen(evals[:m]), _frozen(constant))


def preprocess_apply(P: Preprocessor, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != P.means.shape[0]:
        raise ValueError(f"expected {P.means.shape[0]} columns, got shape {X.shape}")
    Z = (X - P.means) / P.stddevs
    if P.constant.size:
        Z[:, P.constant] = 0.0
    return Z @ P.components.T


def identity_preprocessor(d: int) -> Preprocessor:
    ones = np.ones(d)
    return Preprocessor(_frozen(np.zeros(d)), _frozen(ones), _frozen(np.eye(d)),
                        _frozen(ones / d), _frozen(ones), _frozen(np.zeros(d, dtype=bool)))
