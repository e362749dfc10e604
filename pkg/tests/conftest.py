import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dtlab import library  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"


@pytest.fixture(scope="session")
def lib_envs():
    return {e.name: e.build() for e in library.list_entries()}


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, title, detail in sorted(results):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title} ({detail})")
