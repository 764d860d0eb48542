import numpy as np
import pytest

from cglphase.spectral_grid import Grid, RealField, forward


def random_real_field(grid: Grid, rng, decay: float = 1.0, parity=None):
    """Band-limited real field with smooth random coefficients."""
    n = grid.n
    c = (rng.normal(size=grid.N) + 1j * rng.normal(size=grid.N)) * (1 + np.abs(n)) ** -decay
    c[grid.N // 2] = 0
    c = 0.5 * (c + np.conj(c[grid.neg]))
    if parity == "even":
        c = c.real.astype(complex)
        c = 0.5 * (c + c[grid.neg])
    elif parity == "odd":
        c = 1j * c.imag
        c = 0.5 * (c - c[grid.neg])
    from cglphase.spectral_grid import SpectralField
    return SpectralField(c, grid, parity)


def direct_synthesis(F, x):
    """Oracle: sum_n f_n exp(i q n x) by explicit summation (no FFT)."""
    n, c = F.ordered()
    return np.exp(1j * F.grid.q * np.outer(x, n)) @ c


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(num: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES[num] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for num in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[num])
