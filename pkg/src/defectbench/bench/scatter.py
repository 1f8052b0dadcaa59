from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from ..dataset import Dataset, preprocess_apply, preprocess_fit
from ..resampling import KmfosResult, kmfos


@dataclass(frozen=True, eq=False)
class ScatterResult:
    path: Path
    rows: int
    kmfos: KmfosResult | None


def emit_scatter(D: Dataset, mode: str, out_path: str | Path, variance_target: float = 0.90,
                 k: int = 5, kn: int = 5, seed: int = 0) -> ScatterResult:
    """Write (pc1, pc2, label) rows for the whole dataset, before or after one KMFOS pass."""
    if mode not in ("before", "after"):
        raise ValueError(f"mode must be 'before' or 'after', got {mode!r}")
    P = preprocess_fit(D.features, variance_target)
    if P.n_components < 2:
        raise ValueError(f"PCA kept {P.n_components} component(s); a scatter needs two")
    names = tuple(f"pc{i + 1}" for i in range(P.n_components))
    reduced = Dataset(preprocess_apply(P, D.features), D.labels, names, D.name)
    result = None
    if mode == "after":
        result = kmfos(reduced, k, kn, seed)
        reduced = result.dataset
    out_path = Path(out_path)
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pc1", "pc2", "label"])
        for row, label in zip(reduced.features, reduced.labels):
            w.writerow([repr(float(row[0])), repr(float(row[1])), int(label)])
    return ScatterResult(out_path, reduced.n, result)
