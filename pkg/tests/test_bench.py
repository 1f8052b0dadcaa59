import json
import shutil
import subprocess

import numpy as np
import pytest

from defectbench.bench import protocol as protocol_mod
from defectbench.bench.cli import main
from defectbench.bench.config import (
    ConfigError, config_from_dict, config_to_dict, load_config, save_config,
)
from defectbench.bench.fetch import ChecksumError, fetch_datasets, ingest, sha256_file
from defectbench.bench.protocol import (
    RECORD_FIELDS, RunRecord, read_records, run_benchmark, run_original, run_oversampled,
    write_records,
)
from defectbench.bench.report import build_tables, format_table, render_report
from defectbench.bench.scatter import emit_scatter
from defectbench.dataset import Dataset, parse_csv, stratified_kfold, write_csv
from defectbench.metrics import aggregate


def blob_dataset(n0, n1, sep=4.0, m=3, seed=0, name="blobs"):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.standard_normal((n0, m)), rng.standard_normal((n1, m)) + sep])
    return Dataset(X, [0] * n0 + [1] * n1, tuple(f"f{i}" for i in range(m)), name)


def write_config(tmp_path, datasets, **extra):
    entries = []
    for D in datasets:
        path = tmp_path / f"{D.name}.csv"
        write_csv(D, path)
        entries.append({"name": D.name, "path": path.name, "format": "csv",
                        "label_column": "defective", "sha256": sha256_file(path)})
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"datasets": entries, **extra}))
    return cfg_path


# -- config --------------------------------------------------------------------

def test_config_defaults(tmp_path):
    cfg = config_from_dict({"datasets": [{"name": "x", "path": "x.arff"}]})
    assert (cfg.folds_original, cfg.folds_oversampled) == (5, 10)
    assert cfg.grid_k == (3, 5, 20, 50) and cfg.grid_kn == (5, 15, 20)
    assert len(cfg.grid) == 12
    assert cfg.variance_target == 0.90
    assert cfg.classifiers == ("svm", "logreg", "rf", "nb", "oselm")


@pytest.mark.parametrize("raw, field", [
    ({"folds_original": -1}, "folds_original"),
    ({"grid": {"k": []}}, "grid.k"),
    ({"classifiers": ["tree"]}, "classifiers[0]"),
    ({"datasets": [{"name": "x", "path": "x", "sha256": "abc"}]}, "datasets[0].sha256"),
])
def test_config_schema_errors_name_field(raw, field):
    base = {"datasets": [{"name": "x", "path": "x.arff"}]}
    with pytest.raises(ConfigError) as info:
        config_from_dict({**base, **raw})
    assert f"field {field}:" in str(info.value)


def test_config_duplicate_paths_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"datasets": [{"name": "a", "path": "x"}, {"name": "b", "path": "x"}]})


def test_config_round_trip(tmp_path):
    cfg = config_from_dict({"datasets": [{"name": "x", "path": "x.arff", "defective_tokens": ["Y"]}],
                            "grid": {"k": [3], "kn": [5, 7]}, "seed": 4,
                            "classifier_options": {"rf": {"n_trees": 10}}}, tmp_path)
    save_config(cfg, tmp_path / "c.json")
    assert load_config(tmp_path / "c.json") == cfg
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")


# -- fetch ---------------------------------------------------------------------

def _remote(tmp_path, body=b"@relation r\n"):
    src = tmp_path / "remote" / "r.arff"
    src.parent.mkdir()
    src.write_bytes(body)
    return src


def test_fetch_fresh_download_matches_external_checksum(tmp_path):
    src = _remote(tmp_path)
    if shutil.which("sha256sum") is None:
        pytest.skip("sha256sum not installed")
    external = subprocess.run(["sha256sum", str(src)], capture_output=True, text=True,
                              check=True).stdout.split()[0]
    cfg = config_from_dict({"datasets": [{"name": "r", "path": "data/r.arff",
                                          "url": src.as_uri(), "sha256": external}]}, tmp_path)
    (res,) = fetch_datasets(cfg)
    assert res.status == "downloaded" and res.sha256 == external
    assert (tmp_path / "data" / "r.arff").read_bytes() == src.read_bytes()
    # second call finds the verified file and does not download again
    def no_network(*a, **k):
        raise AssertionError("network used")
    (again,) = fetch_datasets(cfg, opener=no_network)
    assert again.status == "present"


def test_fetch_mismatch_quarantines(tmp_path):
    src = _remote(tmp_path)
    cfg = config_from_dict({"datasets": [{"name": "r", "path": "data/r.arff",
                                          "url": src.as_uri(), "sha256": "0" * 64}]}, tmp_path)
    with pytest.raises(ChecksumError):
        fetch_datasets(cfg)
    assert not (tmp_path / "data" / "r.arff").exists()
    assert (tmp_path / "data" / "r.arff.quarantine").exists()


def test_ingest_rejects_tampered_file(tmp_path):
    cfg = load_config(write_config(tmp_path, [blob_dataset(20, 10)]))
    with open(tmp_path / "blobs.csv", "a") as fh:
        fh.write("0,0,0,1\n")
    with pytest.raises(ChecksumError):
        ingest(cfg, cfg.datasets[0])


# -- protocols -----------------------------------------------------------------

SMALL = {"classifier_options": {"rf": {"n_trees": 20}}}


def test_original_record_count_and_determinism(tmp_path):
    cfg = load_config(write_config(tmp_path, [blob_dataset(60, 20)], **SMALL))
    D = ingest(cfg, cfg.datasets[0])
    a, b = run_original(cfg, D), run_original(cfg, D)
    assert len(a.records) == 25 and not a.skipped
    assert a.records == b.records
    assert len({r.key() for r in a.records}) == 25


def test_separable_blobs_high_recall(tmp_path):
    cfg = load_config(write_config(tmp_path, [blob_dataset(80, 40, sep=8.0)]))
    out = run_original(cfg, ingest(cfg, cfg.datasets[0]))
    for clf in cfg.classifiers:
        assert all(r.recall >= 0.95 for r in out.records if r.classifier == clf), clf


def test_oversampled_single_cell(tmp_path):
    cfg = load_config(write_config(tmp_path, [blob_dataset(60, 20)], grid={"k": [3], "kn": [5]},
                                   **SMALL))
    out = run_oversampled(cfg, ingest(cfg, cfg.datasets[0]))
    assert len(out.records) == 50 and not out.skipped


def test_oversampled_default_grid_count(tmp_path):
    cfg = load_config(write_config(tmp_path, [blob_dataset(140, 60, sep=2.0)], **SMALL))
    out = run_oversampled(cfg, ingest(cfg, cfg.datasets[0]))
    assert len(out.records) == 600 and not out.skipped


def test_oversampled_skips_large_k(tmp_path):
    cfg = load_config(write_config(tmp_path, [blob_dataset(60, 20)], grid={"k": [3, 50], "kn": [5]},
                                   **SMALL))
    out = run_oversampled(cfg, ingest(cfg, cfg.datasets[0]))
    assert len(out.records) == 50 and len(out.skipped) == 50
    assert all("k=50" in s.reason for s in out.skipped)


def test_oversampling_raises_recall_on_rare_positives(tmp_path):
    D = blob_dataset(380, 20, sep=1.5, m=4, seed=3)
    cfg = load_config(write_config(tmp_path, [D], grid={"k": [3], "kn": [5]}, **SMALL))
    runs = run_benchmark(cfg)
    for clf in cfg.classifiers:
        orig = np.mean([r.recall for r in runs.records
                        if r.classifier == clf and r.condition == "original"])
        over = np.mean([r.recall for r in runs.records
                        if r.classifier == clf and r.condition == "oversampled"])
        assert over > orig, clf


def test_no_leakage_from_held_out_rows(tmp_path, monkeypatch):
    D = blob_dataset(60, 20, sep=2.0)
    cfg = load_config(write_config(tmp_path, [D], grid={"k": [3], "kn": [5]},
                                   classifiers=["nb"]))
    seen = {}
    real = protocol_mod._evaluate

    def spy(cfg_, log_, name, condition, k, kn, fold, train, Xte, yte):
        seen[(condition, fold)] = train.features.tobytes() + train.labels.tobytes()
        return real(cfg_, log_, name, condition, k, kn, fold, train, Xte, yte)

    monkeypatch.setattr(protocol_mod, "_evaluate", spy)
    run_original(cfg, D)
    run_oversampled(cfg, D)
    baseline = dict(seen)

    for condition, folds in (("original", cfg.folds_original),
                             ("oversampled", cfg.folds_oversampled)):
        fa = stratified_kfold(D.labels, folds,
                              protocol_mod.derive_seed(cfg.seed, D.name, condition, "folds"))
        X = D.features.copy()
        X[fa.test_index(0)] += 100.0 * np.random.default_rng(1).standard_normal(
            (len(fa.test_index(0)), D.d))
        perturbed = Dataset(X, D.labels, D.feature_names, D.name)
        seen.clear()
        (run_original if condition == "original" else run_oversampled)(cfg, perturbed)
        assert seen[(condition, 0)] == baseline[(condition, 0)]


def test_records_csv_round_trip_and_header(tmp_path):
    recs = [RunRecord("d", "nb", "original", None, None, 0, 0.5, 0.75),
            RunRecord("d", "nb", "oversampled", 3, 5, 1, 1 / 3, 0.1 + 0.2, 1.25)]
    path = tmp_path / "r.csv"
    write_records(recs[::-1], path)
    assert path.read_text().splitlines()[0] == ",".join(RECORD_FIELDS)
    assert read_records(path) == recs


# -- report --------------------------------------------------------------------

def test_report_single_cell():
    recs = [RunRecord("d", "nb", "original", None, None, f, v, v) for f, v in enumerate((0.4, 0.6))]
    (table,) = build_tables(recs)
    cell = table.cell("nb", "recall", "original")
    assert cell.mean == pytest.approx(0.5) and cell.std == pytest.approx(0.1414, abs=1e-4)
    assert "μ = 0.500 σ = 0.141" in format_table(table)


def test_report_empty_and_inconsistent():
    with pytest.raises(ValueError):
        build_tables([])
    recs = [RunRecord("d", "nb", "original", None, None, 0, 0.5, 0.5),
            RunRecord("d", "rf", "oversampled", 3, 5, 0, 0.5, 0.5)]
    with pytest.raises(ValueError):
        build_tables(recs)


def test_report_cells_match_filtered_aggregate(tmp_path):
    rng = np.random.default_rng(0)
    recs = [RunRecord(ds, clf, cond, k, k and 5, f, float(rng.random()), float(rng.random()))
            for ds in ("a", "b") for clf in ("nb", "svm")
            for cond, k in (("original", None), ("oversampled", 3), ("oversampled", 5))
            for f in range(4)]
    tables = render_report(recs, tmp_path)
    assert len(tables) == 2
    for t in tables:
        assert len(t.cells) == 2 * 2 * 2
        for (clf, metric, cond), s in t.cells.items():
            subset = [getattr(r, metric) for r in recs
                      if r.dataset == t.dataset and r.classifier == clf and r.condition == cond]
            assert s == aggregate(subset)
    for name in ("a_table.tsv", "a_table.txt", "a_records.csv", "a_by_setting.tsv"):
        assert (tmp_path / name).exists()
    assert len(read_records(tmp_path / "a_records.csv")) == 24


# -- scatter -------------------------------------------------------------------

def test_scatter_before_and_after(tmp_path):
    D = blob_dataset(60, 15, m=4, sep=2.0)
    before = emit_scatter(D, "before", tmp_path / "b.csv")
    assert before.rows == D.n
    assert len((tmp_path / "b.csv").read_text().splitlines()) == D.n + 1
    after = emit_scatter(D, "after", tmp_path / "a.csv", k=3, kn=5, seed=2)
    labels = np.loadtxt(tmp_path / "a.csv", delimiter=",", skiprows=1)[:, 2]
    n0, n1 = after.kmfos.counts_before_filter
    r0, r1 = after.kmfos.filter.removed_by_class
    assert n0 == n1
    assert (np.sum(labels == 0), np.sum(labels == 1)) == (n0 - r0, n1 - r1)
    emit_scatter(D, "after", tmp_path / "a2.csv", k=3, kn=5, seed=2)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "a2.csv").read_bytes()


def test_scatter_needs_two_components(tmp_path):
    X = np.column_stack([np.arange(10.0), 2 * np.arange(10.0)])
    D = Dataset(X, [0] * 7 + [1] * 3, ("a", "b"))
    with pytest.raises(ValueError):
        emit_scatter(D, "before", tmp_path / "s.csv")


# -- CLI -----------------------------------------------------------------------

def test_cli_run_report_and_determinism(tmp_path, capsys):
    cfg = write_config(tmp_path, [blob_dataset(50, 20)], grid={"k": [3], "kn": [5]}, **SMALL)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o1")]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o2")]) == 0
    a = (tmp_path / "o1" / "records.csv").read_bytes()
    assert a == (tmp_path / "o2" / "records.csv").read_bytes()
    assert len(a.decode().splitlines()) == 1 + 25 + 50
    assert main(["report", "--records", str(tmp_path / "o1" / "records.csv")]) == 0
    assert "Performance assessment: blobs" in capsys.readouterr().out
    assert main(["run", "--config", str(cfg), "--protocol", "original", "--seed", "9",
                 "--out", str(tmp_path / "o3")]) == 0
    assert (tmp_path / "o3" / "records.csv").read_bytes() != a


def test_cli_oversample_export(tmp_path):
    D = blob_dataset(50, 12)
    cfg = write_config(tmp_path, [D])
    out = tmp_path / "aug.csv"
    assert main(["oversample", "--config", str(cfg), "--dataset", "blobs", "--k", "3",
                 "--kn", "5", "--out", str(out), "--space", "raw"]) == 0
    aug = parse_csv(out.read_text(), "defective")
    assert aug.d == D.d and aug.n_defective > D.n_defective
    assert main(["oversample", "--config", str(cfg), "--dataset", "blobs", "--k", "30",
                 "--kn", "5", "--out", str(out)]) == 1


def test_cli_exit_codes(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    cfg = write_config(tmp_path, [blob_dataset(20, 10)])
    assert main(["run", "--config", str(cfg), "--dataset", "nope"]) == 1
    (tmp_path / "blobs.csv").write_text("f0,defective\n1,1\n")  # digest no longer matches
    assert main(["run", "--config", str(cfg)]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("f0,defective\nx,1\n0,0\n")
    cfg2 = tmp_path / "cfg2.json"
    cfg2.write_text(json.dumps({"datasets": [{"name": "bad", "path": "bad.csv", "format": "csv",
                                              "label_column": "defective"}]}))
    assert main(["run", "--config", str(cfg2)]) == 2
    recs = tmp_path / "wrong.csv"
    recs.write_text("a,b\n1,2\n")
    assert main(["report", "--records", str(recs)]) == 3
