"""One PASS/FAIL line per acceptance criterion at the end of the run."""

from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

_OUTCOMES = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.failed:
        prev = _OUTCOMES.get(name)
        if prev is None or prev[0] == "PASS":
            details = [v for k, v in report.user_properties if k == "detail"]
            _OUTCOMES[name] = ("PASS" if report.passed else "FAIL", details)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_OUTCOMES):
        status, details = _OUTCOMES[name]
        label = name.removeprefix("test_").replace("_", " ")
        line = f"{status} {label}"
        if details:
            line += " | " + "; ".join(details)
        terminalreporter.write_line(line)
