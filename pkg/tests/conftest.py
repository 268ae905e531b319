import numpy as np
import pytest

from sbtrpo.policy import Head, PolicySpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_gaussian():
    return PolicySpec(obs_dim=3, act_dim=2, hidden_sizes=(5, 4), head=Head.GAUSSIAN)


@pytest.fixture
def small_categorical():
    return PolicySpec(obs_dim=3, act_dim=4, hidden_sizes=(5, 4), head=Head.CATEGORICAL)


_ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
