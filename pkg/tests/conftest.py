import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, dict[str, list[str]]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    if report.when != "call" and report.outcome == "passed":
        return
    for marker in report.keywords:
        if marker.startswith("criterion_") and marker[10:].isdigit():
            entry = _CRITERIA.setdefault(int(marker[10:]), {"passed": [], "failed": []})
            name = report.nodeid.split("::")[-1]
            entry["passed" if report.passed else "failed"].append(name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        entry = _CRITERIA[num]
        total = len(entry["passed"]) + len(entry["failed"])
        if entry["failed"]:
            line = f"criterion {num:2d}: FAIL  ({len(entry['failed'])}/{total} failed: {', '.join(entry['failed'])})"
        else:
            line = f"criterion {num:2d}: PASS  ({total} test{'s' if total > 1 else ''})"
        terminalreporter.write_line(line)
