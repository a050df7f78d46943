from pathlib import Path

import pytest

from mipsdiff.assembler import assemble_file

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.asm"


def prog(name: str) -> list[int]:
    return assemble_file(fixture_path(name))


@pytest.fixture
def load():
    return prog


# one line per acceptance criterion, echoed at the end of the session
CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
