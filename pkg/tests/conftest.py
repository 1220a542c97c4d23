import numpy as np
import pytest

from vielab import DomainGeometry, WaveParameters, build_volume_grid

# pass/fail lines recorded by the acceptance tests, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def unit_disc():
    return DomainGeometry.disc(1.0)


@pytest.fixture(scope="session")
def unit_square():
    return DomainGeometry.polygon([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


@pytest.fixture(scope="session")
def params_k1():
    return WaveParameters(1.0, 2)


@pytest.fixture(scope="session")
def params_k0():
    return WaveParameters(0.0, 2)


@pytest.fixture(scope="session")
def disc_grid_32(unit_disc):
    return build_volume_grid(unit_disc, 32)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_field(n, rng):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def smooth_probe(points, seed=7, modes=3, scale=1.5):
    """Random band-limited field: converges as a function under refinement."""
    gen = np.random.default_rng(seed)
    out = np.zeros(len(points), dtype=complex)
    d = points.shape[1]
    for _ in range((2 * modes + 1) ** 2):
        freq = gen.integers(-modes, modes + 1, size=d)
        coef = gen.standard_normal() + 1j * gen.standard_normal()
        out += coef * np.exp(1j * np.pi * (points @ freq) / scale)
    return out
