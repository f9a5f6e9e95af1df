from pathlib import Path

import pytest

from dtlf.parser import parse_judgment_file

CORPUS = Path(__file__).resolve().parents[1] / "src" / "dtlf" / "corpus"

# Lines reported by the acceptance suite, printed after the run.
ACCEPTANCE_LINES: list[str] = []


def load_corpus(name: str):
    path = CORPUS / name
    return parse_judgment_file(path.read_text(), base_dir=path.parent)


@pytest.fixture(scope="session")
def corpus():
    return load_corpus


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
