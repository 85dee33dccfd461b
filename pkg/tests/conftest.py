import pytest

from faaschal import data_file, parse, parse_deployment


@pytest.fixture
def training_src():
    return data_file("training.chor")


@pytest.fixture
def training(training_src):
    return parse(training_src)


@pytest.fixture
def deployment():
    return parse_deployment(data_file("training.dep"))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[n])
