import pytest

from uccsim.hamiltonian import heh_problem


@pytest.fixture(scope="session")
def heh17():
    return heh_problem(1.7)


@pytest.fixture(scope="session")
def heh_eq():
    return heh_problem(1.4632)
