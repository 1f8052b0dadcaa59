from __future__ import annotations

import hashlib
import logging
import shutil
import tempfile
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

from ..dataset import Dataset, load_dataset
from .config import DatasetEntry, ExperimentConfig

log = logging.getLogger(__name__)


class FetchError(RuntimeError):
    pass


class ChecksumError(ValueError):
    pass


@dataclass(frozen=True)
class FetchResult:
    name: str
    path: Path
    sha256: str
    status: str  # "present", "downloaded", "unpinned"


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _quarantine(path: Path) -> Path:
    target = path.with_name(path.name + ".quarantine")
    path.replace(target)
    return target


def verify(entry: DatasetEntry, path: Path) -> str:
    digest = sha256_file(path)
    if entry.sha256 is not None and digest != entry.sha256.lower():
        moved = _quarantine(path)
        raise ChecksumError(f"{entry.name}: sha256 {digest} does not match manifest "
                            f"{entry.sha256}; file moved to {moved}")
    return digest


def fetch_datasets(cfg: ExperimentConfig, opener=urllib.request.urlopen,
                   timeout: float = 60.0) -> list[FetchResult]:
    """Download missing dataset files and check every file against its manifest digest."""
    results = []
    for entry in cfg.datasets:
        path = cfg.dataset_path(entry)
        if path.exists():
            digest = verify(entry, path)
            results.append(FetchResult(entry.name, path, digest,
                                       "present" if entry.sha256 else "unpinned"))
            continue
        if entry.url is None:
            raise FetchError(f"{entry.name}: {path} is missing and no url is configured")
        log.info("downloading %s from %s", entry.name, entry.url)
        path.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=path.parent, delete=False) as tmp:
            try:
                with opener(entry.url, timeout=timeout) as resp:
                    shutil.copyfileobj(resp, tmp)
            except (urllib.error.URLError, OSError) as exc:
                Path(tmp.name).unlink(missing_ok=True)
                raise FetchError(f"{entry.name}: download from {entry.url} failed: {exc}") from None
        Path(tmp.name).replace(path)
        digest = verify(entry, path)
        if entry.sha256 is None:
            log.warning("%s has no pinned sha256; downloaded digest is %s", entry.name, digest)
        results.append(FetchResult(entry.name, path, digest,
                                   "downloaded" if entry.sha256 else "unpinned"))
    return results


def ingest(cfg: ExperimentConfig, entry: DatasetEntry) -> Dataset:
    """Verify (when pinned) and parse one configured dataset."""
    path = cfg.dataset_path(entry)
    if not path.exists():
        raise FetchError(f"{entry.name}: {path} not found; run `defectbench fetch` first")
    verify(entry, path)
    return load_dataset(path, entry.format, entry.name, entry.defective_tokens,
                        entry.label_column)
