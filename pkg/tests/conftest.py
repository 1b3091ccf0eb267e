import pytest

from icongloss.graph import Label
from icongloss.pipeline import default_paths, load_grammar, shipped_data_dir

GOLDEN_CODE = "risk-virus-liver-monitoring-null-null-null"
GOLDEN_PHRASE = "monitoring of the risk of viral infection of the liver"


def c(name):
    return Label("c", name)


def s(name):
    return Label("s", name)


@pytest.fixture(scope="session")
def grammar():
    return load_grammar(default_paths(shipped_data_dir()))


@pytest.fixture(scope="session")
def hierarchy(grammar):
    return grammar.hierarchy


@pytest.fixture(scope="session")
def lexicon(grammar):
    return grammar.lexicon


@pytest.fixture
def data_copy(tmp_path):
    """Writable copy of the shipped data directory."""
    src = shipped_data_dir()
    for f in src.iterdir():
        if f.is_file():
            (tmp_path / f.name).write_text(f.read_text(encoding="utf-8"), encoding="utf-8")
    return tmp_path


# -- acceptance report ---------------------------------------------------------

_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = mark.args
        _results.append((number, title, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    merged = {}
    for number, title, outcome in _results:
        _, ok = merged.get(number, (title, True))
        merged[number] = (title, ok and outcome == "passed")
    terminalreporter.section("acceptance criteria")
    for number in sorted(merged):
        title, ok = merged[number]
        terminalreporter.write_line("[%s] criterion %d: %s" % ("PASS" if ok else "FAIL", number, title))
