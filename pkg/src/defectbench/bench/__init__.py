from .config import ConfigError, DatasetEntry, ExperimentConfig, load_config, save_config
from .fetch import ChecksumError, FetchError, fetch_datasets, ingest, sha256_file
from .protocol import (RunLog, RunRecord, SkippedRun, derive_seed, read_records, run_benchmark,
                       run_original, run_oversampled, write_records)
from .report import ReportTable, build_tables, format_table, render_report
from .scatter import emit_scatter
