"""Prints one PASS/FAIL line per acceptance criterion after the run."""

_RESULTS = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        props = dict(report.user_properties)
        _RESULTS[report.nodeid] = (report.outcome, props.get("title", ""), props.get("detail", ""), report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_RESULTS, key=lambda n: int(n.rsplit("_", 1)[-1].split("[")[0])):
        outcome, title, detail, dur = _RESULTS[nodeid]
        num = nodeid.rsplit("_", 1)[-1]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num:>2} {status}  {title} ({dur:.1f} s)  {detail}")
