import numpy as np
import pytest

from harmonic_top.params import ModelParams, PhasePoint

# the four parameter sets of the bifurcation-diagram examples
FIG = {
    "a": ModelParams(I1=1.0, delta=0.0, c1=1.0, c2=0.4, hbar=0.15),
    "b": ModelParams(I1=1.0, delta=0.0, c1=1.0, c2=2.5, hbar=0.15),
    "c": ModelParams(I1=1.0, delta=0.0, c1=1.0, c2=-1.5, hbar=0.15),
    "d": ModelParams(I1=1.0, delta=0.0, c1=1.0, c2=-0.48, hbar=0.15),
}

ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def fig():
    return FIG


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_state(rng, lscale=1.0) -> PhasePoint:
    x = rng.normal(size=4)
    return PhasePoint(x / np.linalg.norm(x), lscale * rng.normal(size=3))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
