import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectralmap.assoc import (
    AssociatedMatrix,
    associated_matrix,
    check_class,
    dumps_matrix,
    loads_matrix,
    star_matrix,
    zero_matrix,
)
from spectralmap.coefficients import CoefficientSet, random_selfadjoint
from spectralmap.errors import RepresentationError, UnsupportedOrderError
from spectralmap.functions import Function1D

problems = st.tuples(st.integers(2, 7), st.integers(0, 2**31))


@settings(max_examples=30, deadline=None)
@given(problems)
def test_associated_matrix_lies_in_class(p):
    n, seed = p
    F = associated_matrix(random_selfadjoint(n, np.random.default_rng(seed)))
    rep = check_class(F)
    assert rep.in_Fn and rep.trace_violation < 1e-12


@settings(max_examples=30, deadline=None)
@given(problems)
def test_selfadjoint_coefficients_give_selfadjoint_matrix(p):
    n, seed = p
    F = associated_matrix(random_selfadjoint(n, np.random.default_rng(seed)))
    assert check_class(F).selfadjoint


@settings(max_examples=20, deadline=None)
@given(problems)
def test_star_is_an_involution(p):
    n, seed = p
    F = associated_matrix(random_selfadjoint(n, np.random.default_rng(seed)))
    x = np.linspace(0, 1, 13)
    np.testing.assert_array_equal(star_matrix(star_matrix(F)).values(x), F.values(x))


def test_star_entries_explicit():
    # f*_{k,j} = (-1)^(k+j+1) f_{n-j+1, n-k+1}
    g = Function1D.from_power([0, 1], [[1.0, 2.0]])
    F = AssociatedMatrix(4, {(3, 1): g, (4, 2): 3.0 * g})
    S = star_matrix(F)
    x = np.array([0.3])
    assert np.allclose(S.values(x)[0, 3, 1], -g(x))  # (4,2) from (3,1), (-1)^7
    assert np.allclose(S.values(x)[0, 2, 0], -3.0 * g(x))  # (3,1) from (4,2), (-1)^5


def test_order_two_closed_form():
    S = Function1D.from_power([0, 1], [[0.0, 2.0, -1.0]])
    F = associated_matrix(CoefficientSet.from_functions(2, S))
    x = np.linspace(0, 1, 7)
    s = S(x)
    V = F.values(x)
    np.testing.assert_allclose(V[:, 0, 0], -s)
    np.testing.assert_allclose(V[:, 1, 0], -(s**2))
    np.testing.assert_allclose(V[:, 1, 1], s)


def test_non_selfadjoint_detected():
    c = CoefficientSet.from_functions(3, tau1=Function1D.constant(1j))
    rep = check_class(associated_matrix(c))
    assert rep.in_Fn and not rep.selfadjoint


def test_zero_matrix_and_errors():
    assert zero_matrix(5).is_zero()
    with pytest.raises(UnsupportedOrderError):
        AssociatedMatrix(1)
    with pytest.raises(RepresentationError):
        AssociatedMatrix(3, {(1, 3): Function1D.constant(1.0)})


@settings(max_examples=20, deadline=None)
@given(problems)
def test_matrix_dump_roundtrip(p):
    n, seed = p
    F = associated_matrix(random_selfadjoint(n, np.random.default_rng(seed)))
    text = dumps_matrix(F)
    assert dumps_matrix(loads_matrix(n, text)) == text
