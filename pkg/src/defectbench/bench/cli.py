"""``defectbench`` command line.

Exit codes: 0 success, 1 config/validation error, 2 data error (parse or
checksum), 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..dataset import DataFormatError, Dataset, preprocess_apply, preprocess_fit, write_csv
from ..resampling import kmfos
from .config import ConfigError, load_config
from .fetch import ChecksumError, FetchError, fetch_datasets, ingest
from .protocol import read_records, run_benchmark, write_records, write_skipped
from .report import format_table, render_report
from .scatter import emit_scatter

log = logging.getLogger("defectbench")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


def cmd_fetch(args) -> int:
    cfg = load_config(args.config)
    for r in fetch_datasets(cfg):
        print(f"{r.name}\t{r.status}\t{r.sha256}\t{r.path}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    out_dir = Path(args.out) if args.out else cfg.resolve(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs = run_benchmark(cfg, args.dataset, args.protocol)
    write_records(runs.records, out_dir / "records.csv")
    write_skipped(runs.skipped, out_dir / "skipped.csv")
    print(f"{len(runs.records)} records, {len(runs.skipped)} skipped -> {out_dir}")
    return EXIT_OK


def cmd_report(args) -> int:
    records = read_records(args.records)
    out_dir = Path(args.out) if args.out else Path(args.records).parent / "report"
    for table in render_report(records, out_dir):
        print(format_table(table))
    return EXIT_OK


def _parameter_check(D: Dataset, k: int, kn: int) -> None:
    if not 2 <= k <= D.n_defective:
        raise ConfigError(f"--k must lie in [2, {D.n_defective}] for {D.name}")
    if not 1 <= kn < 2 * D.n_clean:
        raise ConfigError(f"--kn must lie in [1, {2 * D.n_clean})")


def cmd_oversample(args) -> int:
    cfg = load_config(args.config)
    D = ingest(cfg, cfg.dataset(args.dataset))
    _parameter_check(D, args.k, args.kn)
    if args.space == "pca":
        P = preprocess_fit(D.features, cfg.variance_target)
        names = tuple(f"pc{i + 1}" for i in range(P.n_components))
        D = Dataset(preprocess_apply(P, D.features), D.labels, names, D.name)
    result = kmfos(D, args.k, args.kn, cfg.seed if args.seed is None else args.seed,
                   clni_passes=cfg.clni_passes)
    write_csv(result.dataset, args.out)
    n0, n1 = result.counts_before_filter
    r0, r1 = result.filter.removed_by_class
    print(f"{len(result.synthetic)} synthetic rows; before filtering {n0}/{n1}; "
          f"removed {r0}/{r1}; wrote {result.dataset.n} rows to {args.out}")
    return EXIT_OK


def cmd_scatter(args) -> int:
    cfg = load_config(args.config)
    D = ingest(cfg, cfg.dataset(args.dataset))
    if args.mode == "after":
        _parameter_check(D, args.k, args.kn)
    res = emit_scatter(D, args.mode, args.out, cfg.variance_target, args.k, args.kn,
                       cfg.seed if args.seed is None else args.seed)
    print(f"wrote {res.rows} rows to {res.path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="defectbench", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("fetch", help="download and verify configured datasets")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_fetch)

    s = sub.add_parser("run", help="run the benchmark protocols")
    s.add_argument("--config", required=True)
    s.add_argument("--protocol", choices=("original", "oversampled", "both"))
    s.add_argument("--dataset", action="append", help="restrict to this dataset (repeatable)")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="output directory (default: config output_dir)")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("report", help="render tables from a records CSV")
    s.add_argument("--records", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("oversample", help="export a KMFOS-augmented dataset as CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--dataset", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--kn", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--space", choices=("pca", "raw"), default="pca",
                   help="oversample in the standardised PCA space (as the benchmark does) "
                        "or on the raw metrics")
    s.set_defaults(func=cmd_oversample)

    s = sub.add_parser("scatter", help="first two principal components, before/after KMFOS")
    s.add_argument("--config", required=True)
    s.add_argument("--dataset", required=True)
    s.add_argument("--mode", choices=("before", "after"), required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--kn", type=int, default=5)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_scatter)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataFormatError, ChecksumError, FetchError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("run failed")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
