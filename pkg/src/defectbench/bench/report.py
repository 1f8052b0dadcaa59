"""Aggregate run records into per-dataset tables (mean and sample std per cell)."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from ..metrics import MetricSummary, aggregate
from .protocol import DISPLAY_NAMES, RunRecord, write_records

CONDITIONS = ("original", "oversampled")
METRICS = (("recall", "Recall"), ("balanced_accuracy", "Balanced accuracy"))


@dataclass(frozen=True)
class ReportTable:
    dataset: str
    classifiers: tuple[str, ...]
    conditions: tuple[str, ...]
    cells: dict  # (classifier, metric, condition) -> MetricSummary

    def cell(self, classifier: str, metric: str, condition: str) -> MetricSummary:
        return self.cells[(classifier, metric, condition)]


@dataclass(frozen=True)
class SettingTable:
    """Oversampled results broken down by (k, kn)."""
    dataset: str
    cells: dict  # (classifier, k, kn, metric) -> MetricSummary


def _classifier_order(names) -> tuple[str, ...]:
    known = [c for c in DISPLAY_NAMES if c in names]
    return tuple(known + sorted(set(names) - set(known)))


def build_tables(records: list[RunRecord]) -> list[ReportTable]:
    if not records:
        raise ValueError("no records to report")
    groups: dict = defaultdict(list)
    for r in records:
        groups[(r.dataset, r.classifier, r.condition)].append(r)

    tables = []
    reference = None
    for dataset in sorted({r.dataset for r in records}):
        conditions = tuple(c for c in CONDITIONS if any(
            key[0] == dataset and key[2] == c for key in groups))
        per_condition = {c: {key[1] for key in groups if key[0] == dataset and key[2] == c}
                         for c in conditions}
        sets = set(map(frozenset, per_condition.values()))
        if len(sets) != 1:
            raise ValueError(f"{dataset}: classifier sets differ between conditions: "
                             f"{ {c: sorted(s) for c, s in per_condition.items()} }")
        classifiers = sets.pop()
        if reference is not None and classifiers != reference:
            raise ValueError(f"{dataset}: classifier set {sorted(classifiers)} differs from "
                             f"{sorted(reference)} used for other datasets")
        reference = classifiers
        cells = {}
        for clf in classifiers:
            for cond in conditions:
                rows = groups[(dataset, clf, cond)]
                for metric, _ in METRICS:
                    cells[(clf, metric, cond)] = aggregate([getattr(r, metric) for r in rows])
        tables.append(ReportTable(dataset, _classifier_order(classifiers), conditions, cells))
    return tables


def build_setting_tables(records: list[RunRecord]) -> list[SettingTable]:
    groups: dict = defaultdict(list)
    for r in records:
        if r.condition == "oversampled":
            groups[(r.dataset, r.classifier, r.k, r.kn)].append(r)
    out = []
    for dataset in sorted({key[0] for key in groups}):
        cells = {}
        for (ds, clf, k, kn), rows in groups.items():
            if ds == dataset:
                for metric, _ in METRICS:
                    cells[(clf, k, kn, metric)] = aggregate([getattr(r, metric) for r in rows])
        out.append(SettingTable(dataset, cells))
    return out


def _fmt(s: MetricSummary) -> str:
    return f"μ = {s.mean:.3f} σ = {s.std:.3f}"


def format_table(table: ReportTable) -> str:
    heads = {"original": "Original", "oversampled": "Over-sampled"}
    header = ["Classifier", "Metric"] + [heads[c] for c in table.conditions]
    rows = []
    for clf in table.classifiers:
        for i, (metric, label) in enumerate(METRICS):
            rows.append([DISPLAY_NAMES.get(clf, clf) if i == 0 else "", label]
                        + [_fmt(table.cell(clf, metric, c)) for c in table.conditions])
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    line = "  ".join("-" * w for w in widths)
    text = [f"Performance assessment: {table.dataset}", line,
            "  ".join(h.ljust(w) for h, w in zip(header, widths)), line]
    text += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    text.append(line)
    return "\n".join(text) + "\n"


def _write_tsv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def render_report(records: list[RunRecord], out_dir: str | Path) -> list[ReportTable]:
    """Write ``<dataset>_table.{tsv,txt}``, ``<dataset>_by_setting.tsv`` and
    ``<dataset>_records.csv`` (raw per-fold values for box plots)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = build_tables(records)
    for table in tables:
        rows = [[table.dataset, clf, metric, cond, repr(s.mean), repr(s.std), s.count]
                for clf in table.classifiers for metric, _ in METRICS
                for cond in table.conditions
                for s in [table.cell(clf, metric, cond)]]
        _write_tsv(out_dir / f"{table.dataset}_table.tsv",
                   ["dataset", "classifier", "metric", "condition", "mean", "std", "count"], rows)
        (out_dir / f"{table.dataset}_table.txt").write_text(format_table(table), encoding="utf-8")
        write_records([r for r in records if r.dataset == table.dataset],
                      out_dir / f"{table.dataset}_records.csv")
    for st in build_setting_tables(records):
        rows = [[st.dataset, clf, k, kn, metric, repr(s.mean), repr(s.std), s.count]
                for (clf, k, kn, metric), s in sorted(st.cells.items())]
        _write_tsv(out_dir / f"{st.dataset}_by_setting.tsv",
                   ["dataset", "classifier", "k", "kn", "metric", "mean", "std", "count"], rows)
    return tables
