from importlib import resources

import pytest

from crnp.parser import load_network

FIXTURES = ("net_ab", "net_trio", "net_edel", "net_comb_open", "net_chain", "net_semi")


def fixture_path(name):
    return resources.files("crnp") / "fixtures" / f"{name}.crn"


def load(name):
    return load_network(fixture_path(name))


@pytest.fixture(params=FIXTURES)
def any_fixture(request):
    return request.param, load(request.param)


@pytest.fixture
def net_ab():
    return load("net_ab")


@pytest.fixture
def net_trio():
    return load("net_trio")


@pytest.fixture
def net_edel():
    return load("net_edel")


@pytest.fixture
def net_comb_open():
    return load("net_comb_open")


@pytest.fixture
def net_chain():
    return load("net_chain")


@pytest.fixture
def net_semi():
    return load("net_semi")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
