import math

import pytest

from bosefeedback.params import from_dimensionless

SQRT2 = math.sqrt(2)
FIGURE_SETS = [(0.5, SQRT2), (0.5, 1 / SQRT2), (0.8, 1 / SQRT2), (1.25, 1 / SQRT2)]

_acceptance_lines = []


def record_acceptance(number: int, passed: bool, detail: str) -> str:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    _acceptance_lines.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines):
            terminalreporter.write_line(line)


@pytest.fixture
def fig1_solid():
    return from_dimensionless(0.5, SQRT2, n_mean=1000, n_cond=1000)
