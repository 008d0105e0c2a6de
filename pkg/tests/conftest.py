import numpy as np
import pytest

from fracwave import VariableOrder


@pytest.fixture(params=["zero", "one-minus-cos", "t-sin-t"])
def preset(request):
    return VariableOrder.from_name(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion():
    def record(number, passed, detail):
        line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
