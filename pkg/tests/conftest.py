import pytest

import poisson_malliavin as pm


@pytest.fixture(scope="session")
def rho():
    # rho(X) = 5 on [0,1] x [0,1]: the desk-scale default of the suites.
    return pm.ProductIntensity(T=1.0, marks=pm.uniform_marks(1.0, mass=5.0))


@pytest.fixture(scope="session")
def window_a():
    return pm.Window(0.0, 1.0, 0.0, 0.5)


@pytest.fixture(scope="session")
def window_b():
    return pm.Window(0.0, 1.0, 0.3, 0.8)
