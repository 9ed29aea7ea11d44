"""Inverse problem for data that differ from the model in the first row only.

The data of the zero problem of order 2 are changed at l = 1: the eigenvalue
moves by 5% and the weight by 10%.  The main equation is then finite, so the
recovered potential reproduces the changed data up to roundoff.
"""

import numpy as np

from spectralmap.assoc import associated_matrix
from spectralmap.coefficients import CoefficientSet
from spectralmap.forward import forward_spectral_data, validate_spectral_data
from spectralmap.maineq import inverse_solve

L = 6


def main():
    model = CoefficientSet.zero(2)
    md = forward_spectral_data(associated_matrix(model), L)
    data = md.replace(1, 1, lam=md.lam[0] * 1.05, beta=md.beta[0] * 1.1)
    print(validate_spectral_data(data, md))

    r = inverse_solve(data, model, L, model_data=md)
    print(f"\nmin sigma_min over x: {r.sigma_min.min():.3g}")
    print(f"max residual of the main equation: {r.residual.max():.3g}")
    print(f"coefficient fit residual: {r.recovery.fit_residual:.3g}")

    x = np.linspace(0, 1, 11)
    print("\nrecovered tau_0 antiderivative S(x):")
    for xi, s in zip(x, r.coefficients.tau[0].func(x)):
        print(f"  {xi:.1f}  {s.real: .6f}")

    back = forward_spectral_data(associated_matrix(r.coefficients), L)
    print("\nforward solve of the recovered problem against the data")
    print("  eigenvalues:", np.max(np.abs(back.lam / data.lam - 1)))
    print("  weights:    ", np.max(np.abs(back.beta / data.beta - 1)))


if __name__ == "__main__":
    main()
