from fractions import Fraction

import pytest

from hhpsi import ModelParams, expand_case_i, expand_case_ii, resum


@pytest.fixture(scope="session")
def p_complex():
    return ModelParams(1, 1, Fraction(1))


@pytest.fixture(scope="session")
def table_complex(p_complex):
    return expand_case_i(p_complex, N=30)


@pytest.fixture(scope="session")
def series_complex(table_complex):
    return resum(table_complex)


@pytest.fixture(scope="session")
def table_irrational():
    return expand_case_i(ModelParams(1, 1, Fraction(-4, 5)), N=30)


@pytest.fixture(scope="session")
def table_case_ii():
    return expand_case_ii(ModelParams(1, 1, Fraction(1, 96)), N=30)
