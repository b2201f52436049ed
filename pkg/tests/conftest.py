import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from eben.datasets import make_speech_like  # noqa: E402
from eben.pqmf import design_bank  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def speech_10s():
    return make_speech_like(10.0, seed=0)


@pytest.fixture(scope="session")
def bank4():
    return design_bank(4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        name, ok, detail = RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name}: {detail}")
