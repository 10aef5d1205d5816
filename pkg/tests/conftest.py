import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "qcv",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qcv")

# criterion number -> list of (test id, passed)
_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion the test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    # an xfail counts as a failed criterion; only a clean call phase passes
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        ok = rep.passed and not hasattr(rep, "wasxfail")
        _CRITERIA.setdefault(mark.args[0], []).append((item.name, ok))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        runs = _CRITERIA[k]
        bad = [name for name, ok in runs if not ok]
        verdict = "FAIL" if bad else "PASS"
        detail = f"  (failing: {', '.join(bad)})" if bad else ""
        terminalreporter.write_line(f"{verdict} criterion {k}: {len(runs) - len(bad)}/{len(runs)} checks{detail}")
