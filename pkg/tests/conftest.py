from collections import defaultdict

_criteria = {}
_outcomes = defaultdict(list)


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    number, title = mark.args
    _criteria[number] = title
    if call.when == "call" or call.excinfo is not None:
        _outcomes[number].append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        ok = bool(_outcomes[n]) and all(_outcomes[n])
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {n:>2}. {_criteria[n]}")
