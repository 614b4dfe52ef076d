import warnings

import numpy as np
import pytest

from nlpml.config import initial_data
from nlpml.discretize import SupportWarning, assemble_system, build_grid
from nlpml.kernels import exponential_kernel, gaussian_kernel
from nlpml.stretch import AbsorberProfile, PmlParams
from nlpml.talbot import build_contour


@pytest.fixture(autouse=True)
def _quiet_support():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SupportWarning)
        yield


def make_system(example="ex1", h=2.0**-4, m=40, delta=0.5, backend=None, scale=1.0, z=None):
    if example == "ex1":
        prof, kernel, zz, omega = AbsorberProfile(1.5, 1.0), exponential_kernel(delta), 20.0, -5.0
    else:
        prof, kernel, zz, omega = AbsorberProfile(2.0, 2.0), gaussian_kernel(delta), 10.0, -6.0
    zz = zz if z is None else z
    psi0, psi1 = initial_data(example)
    grid = build_grid(prof, kernel.max_support, h)
    contour = build_contour(omega, 10.0, 1.0, m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SupportWarning)
        return assemble_system(grid, kernel, prof, PmlParams(zz), contour,
                               lambda x: scale * psi0(x), lambda x: scale * psi1(x), backend=backend)


@pytest.fixture(scope="session")
def ex1_small():
    return make_system("ex1")


@pytest.fixture(scope="session")
def ex2_small():
    return make_system("ex2", m=40)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
