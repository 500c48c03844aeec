import numpy as np
import pytest

from simdiag import rng


@pytest.fixture
def gen():
    return rng.stream(20240601, 99)


def pytest_terminal_summary(terminalreporter):
    results = getattr(pytest, "_simdiag_acceptance", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, label, detail = results[n]
        terminalreporter.write_line(f"criterion {n:>2} {'PASS' if ok else 'FAIL'}: {label} ({detail})")
