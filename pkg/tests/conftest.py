import pytest

_RESULTS: dict[tuple[int, str], dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    entry = _RESULTS.setdefault(tuple(mark.args), {"ok": True, "detail": []})
    if rep.failed or (rep.when == "call" and rep.skipped):
        entry["ok"] = False
    if rep.when == "call":
        entry["detail"] += [v for k, v in item.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for (number, title), r in sorted(_RESULTS.items()):
        line = f"criterion {number:>2} {'PASS' if r['ok'] else 'FAIL'}  {title}"
        if r["detail"]:
            line += "  [" + "; ".join(r["detail"]) + "]"
        terminalreporter.write_line(line)
