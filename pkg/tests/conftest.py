import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=1000,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# -- acceptance summary: one PASS/FAIL line per criterion ----------------------

_ACCEPTANCE: dict[int, tuple[str, str, float]] = {}


def pytest_runtest_logreport(report):
    marker = "test_acceptance.py::test_criterion_"
    if marker not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split(marker, 1)[1]
        number = int(name.split("_", 1)[0])
        outcome = "PASS" if report.outcome == "passed" else "FAIL"
        _ACCEPTANCE[number] = (outcome, name.split("_", 1)[1].replace("_", " "), report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        outcome, title, secs = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {outcome}  {title} ({secs:.1f} s)")
