import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectralmap import maineq as M
from spectralmap.assoc import associated_matrix
from spectralmap.coefficients import CoefficientSet
from spectralmap.errors import PoleProximityError, SolvabilityAlarm, ValidationFailure
from spectralmap.forward import SpectralData, forward_spectral_data
from spectralmap.functions import Function1D
from spectralmap.ode import CollocationBVP

from conftest import spectral_data


def perturbed(model_data, lam_factor=1.05, beta_factor=1.1, l=1):
    lam, beta = model_data.tables()
    lam, beta = lam.copy(), beta.copy()
    lam[l - 1] *= lam_factor
    beta[l - 1] *= beta_factor
    return SpectralData.from_tables(model_data.n, lam, beta)


def direct_psi(cache, coeffs):
    """psi from Weyl solutions of a known problem at the spectral points of the system."""
    bvp = CollocationBVP(associated_matrix(coeffs), cache.grid.nodes, breakpoints=cache.grid.breakpoints)
    phi = np.array([bvp.weyl(t.k + 1, lam)[0] for t, lam in zip(cache.triples, cache.lam)])
    return M.psi_from_phi(cache, phi)


@pytest.fixture(scope="module")
def order_two_run(zero_data):
    md = zero_data(2, 4)
    data = perturbed(md)
    model = CoefficientSet.zero(2)
    return M.inverse_solve(data, model, 4, model_data=md), data


def test_data_equal_to_model_give_identity_system(zero_data):
    md = zero_data(2, 4)
    cache = M.ModelCache(CoefficientSet.zero(2), md, md, 4)
    eq = M.assemble(cache)
    assert eq.R.shape[1:] == (0, 0)
    psi, smin, _, res = M.solve(eq)
    r = M.InverseSolveResult(psi, M.phi_from_psi(cache, psi), smin, None, res, cache)
    W = M.reconstruct_weyl(r, 5j)
    np.testing.assert_allclose(W[1], cache.weyl(1, 5j)[0], atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_transform_inverts(seed):
    rng = np.random.default_rng(seed)
    cache = _small_cache()
    phi = rng.normal(size=(len(cache.triples), cache.grid.size)) + 1j * rng.normal(size=(len(cache.triples), cache.grid.size))
    np.testing.assert_allclose(M.phi_from_psi(cache, M.psi_from_phi(cache, phi)), phi, rtol=1e-12, atol=1e-12)


_small = {}


def _small_cache():
    if "c" not in _small:
        md = spectral_data(CoefficientSet.zero(3), 2, ("zero", 3, 2))
        _small["c"] = M.ModelCache(CoefficientSet.zero(3), perturbed(md), md, 2)
    return _small["c"]


def test_kernel_quadrature_agrees_with_bracket_form():
    cache = _small_cache()
    n = cache.n
    mu, lam = 3.0 + 4j, -5.0 + 1j
    for k in range(1, n + 1):
        for k0 in range(1, n + 1):
            a = M.d_kernel(cache, k, k0, mu, lam)
            b = M.d_kernel_bracket(cache, k, k0, mu, lam)
            np.testing.assert_allclose(a, b, atol=1e-10 * max(1, np.max(np.abs(b))))


def test_kernel_derivative_is_the_product():
    cache = _small_cache()
    D = M.d_kernel(cache, 2, 2, 3.0 + 4j, -5.0 + 1j)
    prod = cache.dual_weyl(2, 3.0 + 4j)[0] * cache.weyl(2, -5.0 + 1j)[0]
    np.testing.assert_allclose(cache.grid.diff(D), prod, atol=1e-9)


def test_kernel_pole_raises():
    cache = _small_cache()
    with pytest.raises(PoleProximityError):
        M.d_kernel(cache, 2, 2, 3.0 + 4j, 3.0 + 4j)


@pytest.mark.parametrize("n, L", [(2, 4), (3, 2)])
def test_oracle_residual_for_finite_perturbation(n, L):
    md = spectral_data(CoefficientSet.zero(n), L, ("zero", n, L))
    r = M.inverse_solve(perturbed(md), CoefficientSet.zero(n), L, model_data=md)
    eq = M.assemble(r.cache)
    psi = direct_psi(r.cache, r.coefficients)
    assert np.max(M.main_residual(eq, psi)) < 1e-5
    assert np.min(r.sigma_min) > 1e-3


def test_recovered_problem_reproduces_the_data(order_two_run):
    r, data = order_two_run
    got = forward_spectral_data(associated_matrix(r.coefficients), 4)
    np.testing.assert_allclose(got.lam, data.lam, rtol=1e-7)
    np.testing.assert_allclose(got.beta, data.beta, rtol=1e-6)
    assert r.coefficients.selfadjoint


def test_solved_values_match_weyl_solutions_of_recovered_problem(order_two_run):
    r, _ = order_two_run
    bvp = CollocationBVP(associated_matrix(r.coefficients), 33, breakpoints=r.cache.grid.breakpoints)
    for i, (t, lam) in enumerate(zip(r.cache.triples, r.cache.lam)):
        np.testing.assert_allclose(r.phi[i], bvp.weyl(t.k + 1, lam)[0], atol=1e-4)


def test_truncation_exactness(zero_data):
    # rows beyond the perturbed one equal the model: larger L changes nothing
    md3, md5 = zero_data(2, 3), zero_data(2, 5)
    a = M.solve(M.assemble(M.ModelCache(CoefficientSet.zero(2), perturbed(md3), md3, 3)))[0]
    b = M.solve(M.assemble(M.ModelCache(CoefficientSet.zero(2), perturbed(md5), md5, 5)))[0]
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_reconstruction_refuses_spectral_points(order_two_run):
    r, data = order_two_run
    with pytest.raises(PoleProximityError):
        M.reconstruct_weyl(r, data.lam[0])


def test_singular_system_raises_alarm():
    eq = M.TruncatedMainEquation(np.zeros(1), [], np.eye(2)[None], np.ones((1, 2)), None, None)
    with pytest.raises(SolvabilityAlarm) as info:
        M.solve(eq)
    assert info.value.sigma_min < 1e-10


def test_validation_failure_and_model_shift(zero_data):
    # long enough for the tail check: a shift gives xi_l = 0.5 / l
    md = zero_data(2, 12)
    with pytest.raises(ValidationFailure) as info:
        M.inverse_solve(md, CoefficientSet.zero(2), 12, model_data=md)
    assert info.value.report.failed() == ["non-overlap"]
    r = M.inverse_solve(md, CoefficientSet.zero(2), 12, model_data=md, perturb_model=0.5)
    # the data are those of the zero problem; the shifted model differs from
    # them at every index, so truncation leaves an error of order shift / L
    x = np.linspace(0.05, 0.95, 31)
    err = np.max(np.abs(r.coefficients.tau[0].func(x)))
    assert err < 2 * 0.5 / 12
    assert err < 0.2 * np.max(np.abs(0.5 * x))


def test_shifted_model_moves_every_eigenvalue(zero_data):
    md = zero_data(2, 3)
    shifted, sd = M.shift_model(CoefficientSet.zero(2), md, 0.7)
    got = forward_spectral_data(associated_matrix(shifted), 3)
    np.testing.assert_allclose(got.lam, sd.lam, rtol=1e-9)
    np.testing.assert_allclose(got.beta, sd.beta, rtol=1e-8)


def _exact_weyl_sets(coeffs, lams):
    bvp = CollocationBVP(associated_matrix(coeffs), 33, breakpoints=np.linspace(0, 1, 9))
    return bvp.grid, [(lam, {k: bvp.weyl(k, lam)[0] for k in range(1, coeffs.n + 1)}) for lam in lams]


@pytest.mark.parametrize(
    "coeffs",
    [
        CoefficientSet.from_functions(2, Function1D.from_power([0, 0.5, 1], [[0, 1], [1, -1]])),
        CoefficientSet.from_functions(3, Function1D.from_power([0, 1], [[0, 0.5j]]), tau1=Function1D.from_power([0, 1], [[0, 4]])),
        CoefficientSet.from_functions(4, tau1=Function1D.constant(0.5j), tau2=Function1D.from_power([0, 1], [[1, -4, 3]])),
    ],
    ids=["order2-hat", "order3-linear", "order4-quadratic"],
)
def test_recovery_from_exact_weyl_functions(coeffs):
    grid, sets = _exact_weyl_sets(coeffs, [20j, 20 + 20j])
    rec = M.recover_coefficients(sets, grid, coeffs.n, breakpoints=[0.0, 0.5, 1.0])
    x = np.linspace(0.05, 0.95, 91)
    for a, b in zip(rec.coefficients.tau, coeffs.tau):
        fa = a.func if hasattr(a, "func") else a
        fb = b.func if hasattr(b, "func") else b
        assert np.max(np.abs(fa(x) - fb(x))) < 1e-6
    assert rec.coefficients.selfadjoint and rec.selfadjoint_defect < 1e-6


def test_recovery_does_not_depend_on_lambda():
    c = CoefficientSet.from_functions(2, Function1D.from_power([0, 1], [[0, 1, -1]]))
    grid, sets = _exact_weyl_sets(c, [20j, -15 + 5j])
    assert M.check_lambda_independence(sets[:1], sets[1:], grid, 2) < 1e-6


def test_scaling_weights():
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(M.w_scaling(2, 1, x, 2), np.full(5, 0.5), atol=1e-15)
    assert abs(M.w_scaling(1, 1, 1.0, 4) - np.exp(-1.0)) < 1e-15
