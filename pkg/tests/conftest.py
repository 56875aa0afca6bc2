import math

import numpy as np
import pytest

from cavres import (
    make_double_parabola,
    make_flat,
    make_rectangle,
    make_right_triangle,
)

PHI0 = math.atan(math.sqrt(2.0) / 4.0)


@pytest.fixture(scope="session")
def dp():
    return make_double_parabola()


@pytest.fixture(scope="session")
def flat():
    return make_flat()


@pytest.fixture(scope="session")
def triangle():
    return make_right_triangle()


@pytest.fixture(scope="session")
def rectangle2():
    return make_rectangle(2.0)


def random_entries(seed: int, n: int, x_pad: float = 1e-3, phi_pad: float = 1e-3):
    """Seeded uniform entry states, padded away from the domain edges."""
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-0.5 + x_pad, 0.5 - x_pad, n)
    phis = rng.uniform(-math.pi / 2 + phi_pad, math.pi / 2 - phi_pad, n)
    return xs, phis
