import pytest

import rootbarrier as rb


@pytest.fixture(scope="session")
def uniform_measure():
    return rb.make_power_measure(1.0, 1.0)


@pytest.fixture(scope="session")
def uniform_table(uniform_measure):
    return rb.solve_barrier(uniform_measure, 500, tol=1e-12)


@pytest.fixture(scope="session")
def uniform_table_coarse(uniform_measure):
    return rb.solve_barrier(uniform_measure, 10, tol=1e-12)


@pytest.fixture(scope="session")
def power2_measure():
    return rb.make_power_measure(1.0, 2.0)


@pytest.fixture(scope="session")
def power2_table(power2_measure):
    return rb.solve_barrier(power2_measure, 500, tol=1e-12)
