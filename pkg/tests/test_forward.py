import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from spectralmap.assoc import associated_matrix
from spectralmap.coefficients import CoefficientSet
from spectralmap.errors import FitError, IndexMismatchError, RepresentationError
from spectralmap.forward import (
    CHECK_NAMES,
    SpectralData,
    chi_constants,
    duality_defect,
    find_eigenvalues,
    fit_asymptotics,
    remainders,
    validate_spectral_data,
    weight_matrix,
)
from spectralmap.functions import Function1D
from spectralmap.ode import CollocationBVP

from conftest import random_problem, spectral_data


def exponential_determinant(n, k):
    """Delta_k for zero coefficients from the exponential basis, in mpmath."""
    w = [mp.exp(2j * mp.pi * j / n) for j in range(n)]

    def delta(lam):
        rho = mp.root(lam, n)
        rows = [[(rho * wj) ** m for wj in w] for m in range(k)]
        rows += [[(rho * wj) ** m * mp.exp(rho * wj) for wj in w] for m in range(n - k)]
        return mp.det(mp.matrix(rows))

    return delta


@pytest.mark.parametrize("n, k", [(3, 1), (3, 2), (4, 1), (4, 2), (5, 2)])
def test_zero_coefficient_eigenvalues_against_exponential_determinant(n, k, zero_data):
    lam = find_eigenvalues(associated_matrix(CoefficientSet.zero(n)), k, 3)
    delta = exponential_determinant(n, k)
    mp.mp.dps = 30
    for z in lam:
        root = complex(mp.findroot(delta, mp.mpc(z.real, z.imag)))
        assert abs(root - z) < 1e-9 * abs(root)


def test_order_two_closed_form(zero_data):
    d = zero_data(2, 5)
    l = np.arange(1, 6)
    np.testing.assert_allclose(d.lam, -((np.pi * l) ** 2), rtol=1e-8)
    np.testing.assert_allclose(d.beta, 2 * (np.pi * l) ** 2, rtol=1e-8)


def test_beam_roots(zero_data):
    d = zero_data(4, 3)
    rho = [brentq(lambda r: np.cos(r) * np.cosh(r) - 1, a, a + 2) for a in (4, 7, 10)]
    np.testing.assert_allclose(d.lam[d.k == 2], np.array(rho) ** 4, rtol=1e-8)
    assert abs(rho[0] - 4.7300407449) < 1e-9


def test_chi_constants():
    # n = 3 and n = 4 are the classical main terms; n = 5, 6 are frozen from the computation
    assert np.allclose(chi_constants(2), [0.0], atol=1e-6)
    assert np.allclose(chi_constants(3), [1 / 6, 1 / 6], atol=1e-6)
    assert np.allclose(chi_constants(4), [0.25, 0.5, 0.25], atol=1e-6)
    assert np.allclose(chi_constants(5), [0.3, 0.7, 0.7, 0.3], atol=1e-5)


@pytest.mark.parametrize("n", [3, 4])
def test_weight_numbers_match_integral_formula(n):
    # beta_{l,k} = (-1)^(n-k+1) / integral of Phi*_{n-k+1} Phi_{k+1} at lambda_{l,k}
    c = random_problem(n, 40 + n)
    F = associated_matrix(c)
    d = spectral_data(c, 2, ("random", n, 40 + n, 2))
    b, dual = CollocationBVP(F, 33), CollocationBVP.dual(F, 33)
    for k, lam, beta in zip(d.k, d.lam, d.beta):
        I = b.grid.integrate(dual.weyl(n - k + 1, lam)[0] * b.weyl(k + 1, lam)[0])
        assert abs(beta - (-1) ** (n - k + 1) / I) < 1e-9 * abs(beta)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_structure_of_random_selfadjoint_problem(n):
    c = random_problem(n, 50 + n)
    F = associated_matrix(c)
    d = spectral_data(c, 2, ("random", n, 50 + n, 2))
    for lam in (2.0 + 1j, -30j, 100.0 + 7j):
        assert duality_defect(F, lam) < 1e-7
    rep = validate_spectral_data(d, d.replace(1, 1, lam=d.lam[0] + 1.0))
    for name in ("distinct-eigenvalues", "neighbour-disjoint", "conjugate-symmetry", "sign-condition", "beta-nonzero"):
        assert rep.checks[name].passed, name
    wm = weight_matrix(F, d.lam[0], others=d.lam)
    assert wm.columns == (1,)


def test_remainders_vanish_for_zero_order_two(zero_data):
    kap, kap0 = remainders(zero_data(2, 5))
    assert np.max(np.abs(kap)) < 1e-9 and np.max(np.abs(kap0)) < 1e-9


spectral_tables = st.integers(1, 4).flatmap(
    lambda L: st.tuples(
        st.just(L),
        st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False), min_size=2 * L, max_size=2 * L),
    )
)


@given(spectral_tables)
def test_spectral_file_roundtrip_is_byte_identical(t):
    L, vals = t
    v = np.array(vals).reshape(L, 2)
    d = SpectralData.from_tables(2, v[:, :1], v[:, 1:])
    text = d.dumps()
    assert SpectralData.loads(text).dumps() == text


def test_spectral_data_errors():
    with pytest.raises(RepresentationError):
        SpectralData(3, [1, 1], [1, 1], [1, 2], [1, 1])
    with pytest.raises(RepresentationError):
        SpectralData.loads("1 1 0 0 0 0\n")
    with pytest.raises(RepresentationError):
        SpectralData.loads("# n=2 count=2\n1 1 0 0 1 0\n")
    with pytest.raises(IndexMismatchError):
        validate_spectral_data(SpectralData.from_tables(2, [[1]], [[1]]), SpectralData.from_tables(3, [[1, 2]], [[1, 1]]))


def test_check_names_are_the_seven_hypotheses(zero_data):
    d = zero_data(2, 5)
    rep = validate_spectral_data(d.replace(1, 1, lam=-9.0), d)
    assert tuple(rep.checks) == CHECK_NAMES and rep.overall_pass


def test_fit_for_order_three():
    c = CoefficientSet.from_functions(3, tau1=Function1D.from_power([0, 1], [[0.0, 4.0]]))
    p = fit_asymptotics(spectral_data(c, 12, ("tau1=4x", 12)))
    assert abs(p.theta - 2.0) < 5e-2
    assert np.allclose(p.chi, [1 / 6, 1 / 6], atol=5e-3)


def test_fit_reports_only_chi_for_order_two(zero_data):
    p = fit_asymptotics(zero_data(2, 8))
    assert p.theta is None and p.t0 is None and abs(p.chi[0]) < 1e-6


def test_fit_divergence_raises():
    l = np.arange(1, 9)
    lam = -((np.pi * l) ** 2) * (1 + 0.3 * (-1.0) ** l)
    with pytest.raises(FitError):
        fit_asymptotics(SpectralData.from_tables(2, lam[:, None], 2 * np.abs(lam)[:, None]))
