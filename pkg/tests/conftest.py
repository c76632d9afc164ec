import time

import pytest

# acceptance outcomes, keyed by criterion number
_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    t0 = time.monotonic()
    yield
    item.user_properties.append(("elapsed", time.monotonic() - t0))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    number, title = mark.args
    elapsed = dict(item.user_properties).get("elapsed", 0.0)
    status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
    detail = ""
    if rep.skipped and isinstance(rep.longrepr, tuple):
        detail = rep.longrepr[2]
    elif rep.failed:
        detail = str(rep.longrepr.reprcrash.message if hasattr(rep.longrepr, "reprcrash") else rep.longrepr)
    _CRITERIA[number] = {"title": title, "status": status, "elapsed": elapsed, "detail": detail}


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        c = _CRITERIA[n]
        line = f"criterion {n}: {c['status']}  {c['title']}  ({c['elapsed']:.1f} s)"
        if c["detail"]:
            line += f"  -- {c['detail'].splitlines()[0][:160]}"
        tr.write_line(line)
