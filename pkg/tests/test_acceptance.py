"""Acceptance suite: one test group per criterion, each printing PASS/FAIL.

The summary at the end of the pytest run lists every criterion on one line.
"""

import time

import numpy as np
import pytest
from scipy.optimize import brentq

from spectralmap import maineq as M
from spectralmap.assoc import associated_matrix, star_matrix
from spectralmap.coefficients import CoefficientSet
from spectralmap.errors import SolvabilityAlarm, ValidationFailure
from spectralmap.forward import (
    CHECK_NAMES,
    chi_constants,
    duality_defect,
    fit_asymptotics,
    forward_spectral_data,
    validate_spectral_data,
    weight_matrix,
)
from spectralmap.functions import Function1D
from spectralmap.ode import CollocationBVP, fundamental_matrix, lagrange_bracket

from conftest import random_problem, record, spectral_data

# truncation used for the finite-perturbation experiments
PERTURBATION_L = {2: 20, 3: 2, 4: 3}


def perturb_row(data, l=1, lam_factor=1.05, beta_factor=1.1):
    """Scale lambda_{l,k} and beta_{l,k} for every k by real factors; symmetry is kept."""
    out = data
    for k in range(1, data.n):
        i = entry(data, l, k)
        out = out.replace(l, k, lam=data.lam[i] * lam_factor, beta=data.beta[i] * beta_factor)
    return out


def entry(data, l, k):
    return np.flatnonzero((data.l == l) & (data.k == k))[0]


# -- 1: closed-form spectra ------------------------------------------------------


def test_closed_form_spectra():
    start = time.perf_counter()
    d2 = forward_spectral_data(associated_matrix(CoefficientSet.zero(2)), 5)
    d4 = forward_spectral_data(associated_matrix(CoefficientSet.zero(4)), 3)
    elapsed = time.perf_counter() - start
    l = np.arange(1, 6)
    e2 = max(
        np.max(np.abs(d2.lam / -((np.pi * l) ** 2) - 1)),
        np.max(np.abs(d2.beta / (2 * (np.pi * l) ** 2) - 1)),
    )
    rho = np.array([brentq(lambda r: np.cos(r) * np.cosh(r) - 1, a, a + 2, xtol=1e-15) for a in (4, 7, 10)])
    e4 = np.max(np.abs(d4.lam[d4.k == 2] / rho**4 - 1))
    ok = record(1, "n=2", e2 <= 1e-8, f"rel err {e2:.2e}")
    ok &= record(1, "n=4 k=2", e4 <= 1e-8 and abs(rho[0] - 4.7300407449) < 1e-9, f"rel err {e4:.2e}")
    ok &= record(1, "runtime", elapsed < 30, f"{elapsed:.1f}s")
    assert ok


# -- 2: asymptotic constants ---------------------------------------------------


def test_asymptotic_constants(zero_data):
    chi4 = chi_constants(4)[1]
    # beam eigenvalues: rho_l / pi - l tends to chi_2 exponentially fast
    beam = zero_data(4, 6)
    rho = beam.lam[beam.k == 2].real ** 0.25
    from_data4 = rho[-1] / np.pi - 6
    chi3 = chi_constants(3)
    fitted3 = fit_asymptotics(zero_data(3, 8)).chi
    ok = record(2, "n=4 chi_2", abs(chi4 - 0.5) < 5e-3 and abs(from_data4 - 0.5) < 5e-3,
                f"{chi4:.6f}, from eigenvalues {from_data4:.6f}")
    ok &= record(2, "n=3", np.allclose(chi3, 1 / 6, atol=5e-3) and np.allclose(fitted3, 1 / 6, atol=5e-3),
                 f"{chi3[0]:.6f}, fitted {fitted3[0]:.6f}")
    assert ok


# -- 3: structure of random self-adjoint problems --------------------------------


def regular_points(eigenvalues, count=10):
    """Points off the eigenvalues at growing distance from the origin."""
    pts = [25.0 * (j + 1) * np.exp(1j * (0.3 + 0.55 * j)) for j in range(count)]
    assert all(np.min(np.abs(p - eigenvalues)) > 1.0 for p in pts)
    return pts


@pytest.mark.parametrize("n", [2, 3, 4])
def test_structure_of_random_problems(n):
    worst = {"duality": 0.0, "symmetry": 0.0}
    bad_structure, bad_sign = [], []
    for seed in range(5):
        c = random_problem(n, 300 + 10 * n + seed)
        F = associated_matrix(c)
        d = spectral_data(c, 2, ("random", n, 300 + 10 * n + seed, 2))
        for lam in regular_points(d.lam):
            worst["duality"] = max(worst["duality"], duality_defect(F, lam))
        bvp = CollocationBVP(F)
        for k, lam in zip(d.k, d.lam):
            wm = weight_matrix(F, lam, others=d.lam, bvp=bvp)
            if wm.columns != (int(k),):
                bad_structure.append((seed, int(k), lam))
        rep = validate_spectral_data(d, d.replace(1, 1, lam=d.lam[0] + 1.0))
        worst["symmetry"] = max(worst["symmetry"], rep.checks["conjugate-symmetry"].evidence)
        if n % 2 == 0:
            p = n // 2
            v = (-1) ** (p + 1) * d.beta[d.k == p]
            if not (np.all(v.real > 0) and np.all(np.abs(v.imag) <= 1e-7 * np.abs(v))):
                bad_sign.append(seed)
            if n == 4 and not np.all(d.beta[d.k == 2].real < 0):
                bad_sign.append(seed)
    ok = record(3, f"n={n} duality", worst["duality"] < 1e-7, f"max {worst['duality']:.2e}")
    ok &= record(3, f"n={n} weight matrix", not bad_structure, f"{len(bad_structure)} off-pattern")
    ok &= record(3, f"n={n} symmetry", worst["symmetry"] < 1e-7, f"max {worst['symmetry']:.2e}")
    if n % 2 == 0:
        ok &= record(3, f"n={n} sign", not bad_sign, f"failing seeds {bad_sign}" if bad_sign else "")
    assert ok


# -- 4: Lagrange identity ----------------------------------------------------------


def test_lagrange_identity():
    rng = np.random.default_rng(4)
    worst = 0.0
    for trial in range(20):
        n = int(rng.integers(2, 5))
        F = associated_matrix(random_problem(n, 400 + trial, scale=float(rng.uniform(0.5, 3))))
        lam, mu = (rng.normal(scale=30, size=2) + 1j * rng.normal(scale=30, size=2))
        Y = fundamental_matrix(F, lam).values
        Z = fundamental_matrix(star_matrix(F), (-1) ** n * mu)
        for a in range(n):
            for b in range(n):
                y, z = Y[:, :, b].T, Z.values[:, :, a].T
                lhs = lagrange_bracket(z, y) - lagrange_bracket(z[:, :1], y[:, :1])
                rhs = (lam - mu) * Z.grid.cumint(z[0] * y[0])
                worst = max(worst, np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(rhs))))
    assert record(4, "20 configurations", worst < 1e-7, f"max residual {worst:.2e}")


# -- 5 and 6: main equation on finite perturbations ------------------------------

_runs = {}


def perturbation_run(n, zero_data):
    if n not in _runs:
        L = PERTURBATION_L[n]
        md = zero_data(n, L)
        data = perturb_row(md)
        _runs[n] = M.inverse_solve(data, CoefficientSet.zero(n), L, model_data=md)
    return _runs[n]


def direct_psi(cache, coeffs):
    """psi from Weyl solutions of the recovered problem at the spectral points."""
    bvp = CollocationBVP(associated_matrix(coeffs), cache.grid.nodes, breakpoints=cache.grid.breakpoints)
    phi = np.array([bvp.weyl(t.k + 1, lam)[0] for t, lam in zip(cache.triples, cache.lam)])
    return M.psi_from_phi(cache, phi)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_main_equation_oracle(n, zero_data):
    r = perturbation_run(n, zero_data)
    eq = M.assemble(r.cache)
    psi = direct_psi(r.cache, r.coefficients)
    res = float(np.max(M.main_residual(eq, psi)))
    assert record(5, f"n={n}", res < 1e-5, f"max residual {res:.2e}")


@pytest.mark.parametrize("n", [2, 3, 4])
def test_main_equation_solvable(n, zero_data):
    r = perturbation_run(n, zero_data)
    smin = float(np.min(r.sigma_min))
    assert record(6, f"n={n}", smin >= 1e-3, f"min sigma_min {smin:.2e}")


def test_flipped_weight_is_rejected(zero_data):
    md = zero_data(4, PERTURBATION_L[4])
    i = entry(md, 1, 2)
    data = perturb_row(md).replace(1, 2, beta=-1.1 * md.beta[i])
    with pytest.raises(ValidationFailure) as info:
        M.inverse_solve(data, CoefficientSet.zero(4), PERTURBATION_L[4], model_data=md)
    failed = info.value.report.failed()
    assert record(6, "n=4 flipped beta_(1,2)", "sign-condition" in failed, f"failed checks {failed}")


# -- 7: end-to-end roundtrip ------------------------------------------------------


def roundtrip_error(target, L):
    start = time.perf_counter()
    data = forward_spectral_data(associated_matrix(target), L)
    md = forward_spectral_data(associated_matrix(CoefficientSet.zero(target.n)), L)
    r = M.inverse_solve(data, CoefficientSet.zero(target.n), L, model_data=md)
    x = np.linspace(0.05, 0.95, 181)
    err = 0.0
    for a, b in zip(r.coefficients.tau, target.tau):
        fa = a.func if hasattr(a, "func") else a
        fb = b.func if hasattr(b, "func") else b
        err = max(err, float(np.max(np.abs(fa(x) - fb(x)))))
    return err, r.coefficients.selfadjoint, time.perf_counter() - start


def test_roundtrip_order_two_step():
    # tau_0 is the derivative of a hat: a step of height -2a at x = 1/2
    a = 0.05
    target = CoefficientSet.from_functions(2, Function1D.from_power([0, 0.5, 1], [[0, a], [a, -a]]))
    err, sa, elapsed = roundtrip_error(target, 20)
    assert record(7, "n=2 step", err <= 1e-3 and sa and elapsed < 600,
                  f"error {err:.2e}, self-adjoint {sa}, {elapsed:.0f}s")


def test_roundtrip_order_four_quadratic():
    target = CoefficientSet.from_functions(
        4, tau1=Function1D.constant(0.5j), tau2=Function1D.from_power([0, 1], [[1, -4, 3]])
    )
    try:
        err, sa, elapsed = roundtrip_error(target, 20)
    except (ValidationFailure, SolvabilityAlarm) as exc:
        detail = str(exc)
        if isinstance(exc, ValidationFailure):
            detail += "; " + "; ".join(
                f"{name} {exc.report.checks[name].evidence:.3g}" for name in exc.report.failed()
            )
        record(7, "n=4 quadratic", False, detail)
        raise
    assert record(7, "n=4 quadratic", err <= 1e-3 and sa and elapsed < 600,
                  f"error {err:.2e}, self-adjoint {sa}, {elapsed:.0f}s")


# -- 8: validator completeness -----------------------------------------------------

VALIDATOR_L = 6


def inject(name, md):
    """Clean data (row 1 perturbed) with one targeted violation.

    Except for the symmetry violation every change keeps the symmetry between
    k and n-k, and except for the tail violation it stays in the first half of
    the rows, so the tail of xi is untouched.
    """
    i1, i3 = entry(md, 1, 2), entry(md, 2, 1)
    clean_lam = md.lam[i1] * 1.05
    d = perturb_row(md)
    # a touched row differs from the model in every entry
    if name not in (None, "sign-condition", "non-overlap", "l2-tail"):
        d = perturb_row(d, 2, 1.02, 1.0)
    if name == "distinct-eigenvalues":
        d = d.replace(2, 2, lam=clean_lam)
    elif name == "neighbour-disjoint":
        d = d.replace(2, 1, lam=clean_lam).replace(2, 3, lam=clean_lam)
    elif name == "conjugate-symmetry":
        d = d.replace(2, 1, lam=md.lam[i3] * 1.03)
    elif name == "sign-condition":
        d = d.replace(1, 2, beta=-1.1 * md.beta[i1])
    elif name == "beta-nonzero":
        d = d.replace(2, 1, beta=0.0).replace(2, 3, beta=0.0)
    elif name == "non-overlap":
        d = d.replace(1, 2, lam=md.lam[i1])
    elif name == "l2-tail":
        d = perturb_row(d, VALIDATOR_L, 1.05, 1.0)
    return d


@pytest.mark.parametrize("name", (None,) + CHECK_NAMES)
def test_validator_check_fails_in_isolation(name, zero_data):
    md = zero_data(4, VALIDATOR_L)
    rep = validate_spectral_data(inject(name, md), md)
    failed = rep.failed()
    expected = [] if name is None else [name]
    assert record(8, name or "clean data", failed == expected, f"failed checks {failed}")
