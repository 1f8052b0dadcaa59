"""Collects acceptance verdicts and prints one line per criterion after the run."""

from collections import defaultdict

import pytest

_VERDICTS: dict = defaultdict(list)


@pytest.fixture
def criterion():
    def record(number, ok: bool, detail: str = "") -> bool:
        _VERDICTS[number].append((bool(ok), detail))
        return bool(ok)
    return record


def _order(key):
    text = str(key)
    digits = "".join(ch for ch in text if ch.isdigit())
    return (int(digits) if digits else 0, text)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(_VERDICTS, key=_order):
        parts = _VERDICTS[key]
        status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        details = "; ".join(d for _, d in parts if d)
        tr.write_line(f"criterion {key}: {status}  {details}")
