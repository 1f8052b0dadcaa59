"""Experiment configuration: JSON file -> validated, defaults-filled ExperimentConfig.

Relative paths in the file (dataset paths, output_dir) resolve against the
directory containing the config file.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

CLASSIFIER_NAMES = ("svm", "logreg", "rf", "nb", "oselm")
PROTOCOLS = ("original", "oversampled", "both")


class ConfigError(ValueError):
    pass


_DATASET_SCHEMA = {
    "type": "object",
    "required": ["name"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "path": {"type": "string", "minLength": 1},
        "url": {"type": ["string", "null"]},
        "sha256": {"type": ["string", "null"], "pattern": "^[0-9a-fA-F]{64}$"},
        "format": {"enum": ["arff", "csv"]},
        "defective_tokens": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "label_column": {"type": ["string", "null"]},
    },
    "anyOf": [{"required": ["path"]}, {"required": ["url"]}],
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["datasets"],
    "additionalProperties": False,
    "properties": {
        "datasets": {"type": "array", "items": _DATASET_SCHEMA, "minItems": 1},
        "protocol": {"enum": list(PROTOCOLS)},
        "folds_original": {"type": "integer", "minimum": 2},
        "folds_oversampled": {"type": "integer", "minimum": 2},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
                "kn": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            },
        },
        "variance_target": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "classifiers": {"type": "array", "items": {"enum": list(CLASSIFIER_NAMES)},
                        "minItems": 1, "uniqueItems": True},
        "classifier_options": {
            "type": "object",
            "propertyNames": {"enum": list(CLASSIFIER_NAMES)},
            "additionalProperties": {"type": "object"},
        },
        "clni_passes": {"type": "integer", "minimum": 1},
        "output_dir": {"type": "string"},
        "record_wall_time": {"type": "boolean"},
    },
}


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    path: str | None = None
    url: str | None = None
    sha256: str | None = None
    format: str = "arff"
    defective_tokens: tuple[str, ...] = ("Y", "true", "1")
    label_column: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[DatasetEntry, ...]
    protocol: str = "both"
    folds_original: int = 5
    folds_oversampled: int = 10
    grid_k: tuple[int, ...] = (3, 5, 20, 50)
    grid_kn: tuple[int, ...] = (5, 15, 20)
    variance_target: float = 0.90
    seed: int = 0
    classifiers: tuple[str, ...] = CLASSIFIER_NAMES
    classifier_options: dict[str, dict[str, Any]] = field(default_factory=dict)
    clni_passes: int = 1
    output_dir: str = "results"
    record_wall_time: bool = False
    base_dir: Path = field(default=Path("."), compare=False)

    @property
    def grid(self) -> list[tuple[int, int]]:
        return [(k, kn) for k in self.grid_k for kn in self.grid_kn]

    def dataset(self, name: str) -> DatasetEntry:
        for entry in self.datasets:
            if entry.name == name:
                return entry
        raise ConfigError(f"no dataset named {name!r} in config "
                          f"(have {[e.name for e in self.datasets]})")

    def resolve(self, path: str | Path) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def dataset_path(self, entry: DatasetEntry) -> Path:
        if entry.path is not None:
            return self.resolve(entry.path)
        return self.resolve(Path("data") / Path(entry.url).name)

    def replace(self, **changes) -> "ExperimentConfig":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return ExperimentConfig(**values)


def _field_path(error: jsonschema.ValidationError) -> str:
    path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in error.absolute_path)
    return path.lstrip(".") or "<root>"


def config_from_dict(raw: dict, base_dir: str | Path = ".") -> ExperimentConfig:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"config field {_field_path(e)}: {e.message}")

    datasets = []
    for d in raw["datasets"]:
        d = dict(d)
        if "defective_tokens" in d:
            d["defective_tokens"] = tuple(d["defective_tokens"])
        if d.get("format") == "csv" and not d.get("label_column"):
            raise ConfigError(f"config field datasets.{d['name']}.label_column: "
                              "required for csv datasets")
        datasets.append(DatasetEntry(**d))
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise ConfigError("config field datasets: dataset names must be distinct")
    paths = [d.path for d in datasets if d.path is not None]
    if len(set(paths)) != len(paths):
        raise ConfigError("config field datasets: dataset paths must be distinct")

    grid = raw.get("grid", {})
    kwargs = {k: raw[k] for k in ("protocol", "folds_original", "folds_oversampled",
                                  "variance_target", "seed", "clni_passes", "output_dir",
                                  "record_wall_time") if k in raw}
    if "classifiers" in raw:
        kwargs["classifiers"] = tuple(raw["classifiers"])
    if "classifier_options" in raw:
        kwargs["classifier_options"] = {k: dict(v) for k, v in raw["classifier_options"].items()}
    if "k" in grid:
        kwargs["grid_k"] = tuple(grid["k"])
    if "kn" in grid:
        kwargs["grid_kn"] = tuple(grid["kn"])
    return ExperimentConfig(datasets=tuple(datasets), base_dir=Path(base_dir), **kwargs)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "datasets": [{k: (list(v) if isinstance(v, tuple) else v)
                      for k, v in asdict(d).items() if v is not None} for d in cfg.datasets],
        "protocol": cfg.protocol,
        "folds_original": cfg.folds_original,
        "folds_oversampled": cfg.folds_oversampled,
        "grid": {"k": list(cfg.grid_k), "kn": list(cfg.grid_kn)},
        "variance_target": cfg.variance_target,
        "seed": cfg.seed,
        "classifiers": list(cfg.classifiers),
        "classifier_options": cfg.classifier_options,
        "clni_passes": cfg.clni_passes,
        "output_dir": cfg.output_dir,
        "record_wall_time": cfg.record_wall_time,
    }


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return config_from_dict(raw, path.parent)


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")
