import os

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=30)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    """Record (and print) the one-line verdict of an acceptance criterion."""

    def record(number, title, ok, detail):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line, flush=True)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
