import numpy as np
import pytest

from corrected_ph import HeavyComponent, MapModel, MixtureService, RationalLST, solve_base


@pytest.fixture(scope="session")
def e2_model():
    """Erlang-2 arrivals at rate 2.5 written as a two-state cyclic MAP."""
    return MapModel([5.0, 5.0], [[0.0, 1.0], [1.0, 0.0]], [0.0, 1.0])


@pytest.fixture(scope="session")
def exp3():
    return RationalLST.exponential(3.0)


@pytest.fixture(scope="session")
def aw2():
    return HeavyComponent.aw_sqrt(2.0)


@pytest.fixture(scope="session")
def e2_mixture(exp3, aw2):
    return MixtureService(0.01, exp3, aw2)


@pytest.fixture(scope="session")
def e2_base(e2_model, exp3):
    return solve_base(e2_model, exp3)


@pytest.fixture(scope="session")
def mg1_model():
    return MapModel.poisson(1.0)


@pytest.fixture(scope="session")
def mg1_base(mg1_model, exp3):
    return solve_base(mg1_model, exp3)


@pytest.fixture(scope="session")
def cyclic3_model():
    """Erlang-3 arrivals; with Exp(3) service the nonzero roots are a complex pair."""
    return MapModel.erlang_renewal(3, 7.5)


@pytest.fixture(scope="session")
def cyclic3_base(cyclic3_model, exp3):
    return solve_base(cyclic3_model, exp3)


@pytest.fixture(scope="session")
def rhp_points():
    rng = np.random.default_rng(11)
    return rng.uniform(0.2, 5.0, 25) + 1j * rng.uniform(-5.0, 5.0, 25)
