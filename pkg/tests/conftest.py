import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_CRITERION = re.compile(r"test_criterion_(\d+)")
_results = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if m is None or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    n = int(m.group(1))
    detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
    status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    _results[n] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        status, detail = _results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}" + (f"  {detail}" if detail else ""))
