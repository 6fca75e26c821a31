import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from siabf import TimeSeries  # noqa: E402

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {name}: {detail}")


@pytest.fixture
def four_tone_series():
    """8 s of the four-tone signal at d = 0.01 with sigma = 0.1 noise, plus the next 2 s."""
    from oracles import four_tone

    rng = np.random.default_rng(2023)
    d = 0.01
    t = np.arange(1000) * d
    x = four_tone(t, 0.1, rng)
    return TimeSeries(x[:800], 0.0, d), x[800:], four_tone(t[800:])


@pytest.fixture
def tone_series():
    t = np.arange(200.0)
    return TimeSeries(np.sin(2 * np.pi * t / 25), 0.0, 1.0)
