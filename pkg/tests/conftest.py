from hypothesis import settings

# JIT compilation on first call makes per-example deadlines meaningless
settings.register_profile("default", deadline=None)
settings.load_profile("default")

_by_node = {}
_results = {}  # criterion name -> [outcome, details]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): exit criterion reported in the terminal summary")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _by_node[item.nodeid] = mark.args[0]


def pytest_runtest_logreport(report):
    name = _by_node.get(report.nodeid)
    if name is None:
        return
    entry = _results.setdefault(name, [None, []])
    if report.failed:
        entry[0] = "FAIL"
    elif report.when == "call" and entry[0] is None:
        entry[0] = "PASS"
    elif report.skipped and entry[0] is None:
        entry[0] = "SKIP"
    if report.when == "call":
        entry[1] += [v for k, v in report.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name, (outcome, details) in _results.items():
        line = f"{outcome}  {name}"
        if details:
            line += "  [" + "; ".join(details) + "]"
        terminalreporter.write_line(line)
