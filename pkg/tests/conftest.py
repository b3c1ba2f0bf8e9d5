import numpy as np
import pytest

_ACCEPTANCE = []


def record_acceptance(number, name, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} [{number:>2}] {name}: {detail}"
    _ACCEPTANCE.append((number, line))
    print(line)
    return passed


@pytest.fixture
def acceptance():
    return record_acceptance


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
