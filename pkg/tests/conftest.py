import numpy as np
import pytest

from rbenjamin import ModelParams, PeriodicGrid, SpectralField
from rbenjamin.spectral import mirror

ACCEPTANCE_LINES = []


def random_field(grid, rng, decay=1.0, scale=1.0, mean=True):
    """Real random field with |F(k)| ~ (1+k²)^{-decay/2}."""
    K = grid.mode_cutoff
    half = (rng.standard_normal(K + 1) + 1j * rng.standard_normal(K + 1)) \
        * (1.0 + np.arange(K + 1) ** 2) ** (-decay / 2)
    half[0] = half[0].real if mean else 0.0
    return SpectralField(grid, scale * mirror(half))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[8, 16, 32])
def small_grid(request):
    return PeriodicGrid(request.param)


@pytest.fixture
def grid64():
    return PeriodicGrid(64)


@pytest.fixture
def hilbert():
    return ModelParams(alpha=1.0, a=1.0, b=1.0)


@pytest.fixture
def strip():
    return ModelParams(alpha=1.0, a=1.0, b=1.0, h=2.0, operator="strip")


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line; the lines are echoed in the terminal summary."""

    def record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}"
        if detail:
            line += f" ({detail})"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0].split()[0])):
            terminalreporter.write_line(line)
