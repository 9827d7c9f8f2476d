import pytest

from hyperpot import (
    builtin_group_table,
    make_bessel,
    make_chebyshev,
    make_conjugacy,
    make_cyclic,
)


@pytest.fixture(scope="session")
def z6():
    return make_cyclic(6)


@pytest.fixture(scope="session")
def z12():
    return make_cyclic(12)


@pytest.fixture(scope="session")
def s3():
    return make_conjugacy(builtin_group_table("s3"))


@pytest.fixture(scope="session")
def q8():
    return make_conjugacy(builtin_group_table("q8"))


@pytest.fixture(scope="session")
def cheb16():
    return make_chebyshev(16)


@pytest.fixture(scope="session")
def cheb64():
    return make_chebyshev(64)


@pytest.fixture(scope="session")
def bessel64():
    return make_bessel(0.5, 64, 0.5)
