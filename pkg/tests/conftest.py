"""Collects acceptance-criterion outcomes and prints one line per criterion at the end of the run."""

import pytest

_RESULTS: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): test backs a numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = marker.args
        entry = _RESULTS.setdefault(number, {"title": title, "outcomes": [], "details": []})
        entry["outcomes"].append("skipped" if rep.skipped else "passed" if rep.passed else "failed")
        entry["details"].extend(v for k, v in item.user_properties if k == "detail")
        if rep.skipped:
            entry["details"].append(f"skipped: {item.name}")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        ran = [o for o in entry["outcomes"] if o != "skipped"]
        status = "FAIL" if "failed" in ran else "PASS" if ran else "SKIP"
        terminalreporter.write_line(f"{status} criterion {number}: {entry['title']}")
        for d in entry["details"]:
            terminalreporter.write_line(f"     {d}")
