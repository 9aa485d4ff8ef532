import numpy as np
import pytest

from pcdeval import kernels

BACKENDS = ["numpy"] + (["numba"] if kernels.numba_backend is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per kernel backend."""
    module = kernels.numpy_backend if request.param == "numpy" else kernels.numba_backend
    monkeypatch.setattr(kernels, "_active", module)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def record_acceptance(key, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
