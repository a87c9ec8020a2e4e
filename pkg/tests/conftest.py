import json
from pathlib import Path

import pytest

from tcsum import fano
from tcsum.lattice import standard_lattice

DATA = Path(__file__).resolve().parents[1] / "src" / "tcsum" / "data"


@pytest.fixture(scope="session")
def K3():
    return standard_lattice("K3")


@pytest.fixture(scope="session")
def db():
    return fano.by_name(fano.builtin())


@pytest.fixture(scope="session")
def rank3_hints():
    return json.loads((DATA / "hints_p2xp1_rank3.json").read_text())


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
