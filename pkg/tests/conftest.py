import numpy as np
import pytest

from mhdlimit.spectral import Grid, SpectralField, fft_forward


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_field(grid: Grid, rng, comps: int = 1, kmax: float | None = None) -> SpectralField:
    f = fft_forward(rng.standard_normal((comps,) + grid.shape), grid)
    kmax = grid.n / 3 if kmax is None else kmax
    mask = (grid.kmag <= kmax * grid.k0) & (grid.kmag > 0)
    return SpectralField(grid, f.coeffs * mask)


_CRITERIA: dict[int, str] = {}


@pytest.fixture(scope="session")
def criterion_report():
    """Record one verdict line per acceptance criterion."""

    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
