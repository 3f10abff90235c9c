import re

import pytest

_LINES = []


@pytest.fixture
def verdict():
    """Record one acceptance line; it is printed again in the terminal summary."""

    def record(number, name, ok, detail):
        line = f"criterion {number:<3} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        print(line)
        _LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda l: int(re.search(r"\d+", l).group())):
            terminalreporter.write_line(line)
