import numpy as np
import pytest

from cuspkit.density import DensityField
from cuspkit.hydrogenic import KINDS, HydrogenicState, eval_rho, to_model


@pytest.fixture(params=KINDS)
def kind(request):
    return request.param


def state_field(kind, Z=1.0):
    return DensityField(to_model(HydrogenicState(kind, Z)))


def rho_handle(kind, Z=1.0):
    st = HydrogenicState(kind, Z)
    return lambda x: np.asarray(eval_rho(st, x))


def random_points(rng, n, r_min, r_max):
    u = rng.normal(size=(n, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u * rng.uniform(r_min, r_max, size=(n, 1))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
