import os
import sys

import pytest

HERE = os.path.dirname(__file__)
sys.path.insert(0, HERE)

ROOT = os.path.dirname(HERE)
CORPUS = os.path.join(ROOT, "corpus")
GOLDEN = os.path.join(HERE, "golden")


@pytest.fixture
def corpus_dir():
    return CORPUS


def corpus_text(name: str) -> str:
    with open(os.path.join(CORPUS, name + ".qfy"), encoding="utf-8") as fh:
        return fh.read()


def golden(name: str) -> str:
    with open(os.path.join(GOLDEN, name), encoding="utf-8") as fh:
        return fh.read()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = [mod.RESULTS[k] for k in sorted(mod.RESULTS)] if mod else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
