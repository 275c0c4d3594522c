from __future__ import annotations

import pytest

from helpers import rational_kernel


@pytest.fixture
def lorentz():
    # 1/(1 + lambda^2) = 1/(1 - x^2)
    return rational_kernel([1.0], [1.0, 0.0, -1.0], name="lorentz")


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
