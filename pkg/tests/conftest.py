import sys
from collections import defaultdict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = {
    1: "two-user fixture RBQ 36 and 440 exactly, under 1 s",
    2: "mean-vector property suite",
    3: "point-in-polygon oracle equivalence",
    4: "geodesic round trip within 1e-6",
    5: "regression recovery",
    6: "synthetic end-to-end",
    7: "content golden suite",
}
_results: dict[int, list[bool]] = defaultdict(list)


def pytest_runtest_logreport(report):
    marks = getattr(report, "criteria", ())
    if report.when == "call" or (report.when == "setup" and not report.passed):
        for n in marks:
            _results[n].append(report.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    report.criteria = tuple(m.args[0] for m in item.iter_markers("criterion"))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        runs = _results.get(n)
        if runs is None:
            continue
        status = "PASS" if all(runs) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status} ({sum(runs)}/{len(runs)} tests) {_CRITERIA[n]}")
