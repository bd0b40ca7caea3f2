import pytest

from armorparse import corpus


@pytest.fixture(scope="session")
def grammars():
    return corpus.load_all()


@pytest.fixture(scope="session")
def tag(grammars):
    return grammars["Tag"]


@pytest.fixture(scope="session")
def container(grammars):
    return grammars["Container"]


@pytest.fixture(scope="session")
def html(grammars):
    return grammars["HtmlMini"]


@pytest.fixture(scope="session")
def js(grammars):
    return grammars["JsMini"]


@pytest.fixture(scope="session")
def reduced(grammars):
    return grammars["ReducedTag"]


@pytest.fixture(scope="session")
def ct(grammars):
    return corpus.manifest("container_tag", grammars)


@pytest.fixture(scope="session")
def hj(grammars):
    return corpus.manifest("html_js", grammars)


@pytest.fixture(scope="session")
def page(grammars):
    return corpus.page_template(grammars)


@pytest.fixture(scope="session")
def xss():
    return corpus.attacks("xss")


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


@pytest.fixture
def report_criterion(request):
    """Record one acceptance line; printed again in the terminal summary."""
    lines = request.config.stash[ACCEPTANCE_LINES]

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        lines.append((number, line))
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
