import pytest

from wptvec.model import PhysicalParams

# acceptance lines collected by test_acceptance.py, printed after the run
ACCEPTANCE = []


@pytest.fixture
def unit():
    return PhysicalParams.unit()


@pytest.fixture
def hw():
    return PhysicalParams.from_hardware()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
