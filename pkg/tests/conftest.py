import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = {}


@pytest.fixture
def report():
    """Record one acceptance-criterion outcome for the terminal summary."""
    def record(n, ok, detail):
        _ACCEPTANCE[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(_ACCEPTANCE[n])
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
