"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
import pytest

_LINES = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        if rep.failed and not detail:
            detail = rep.longreprtext.strip().splitlines()[-1][:200]
        _LINES[mark.args[0]] = ("PASS" if rep.passed else "FAIL", mark.args[1], detail)


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_LINES):
        status, title, detail = _LINES[cid]
        terminalreporter.write_line(f"{status} criterion {cid}: {title} | {detail}")
