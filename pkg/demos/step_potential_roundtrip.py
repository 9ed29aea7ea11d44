"""Roundtrip for a potential with a jump: forward, then inverse from 20 rows.

tau_0 is the derivative of a hat of height a/2, a step at x = 1/2.  Only its
antiderivative S is represented.  The zero problem is the model.  With 20
rows the remaining error is the truncation of the data.  Takes about a
minute.
"""

import numpy as np

from spectralmap.assoc import associated_matrix
from spectralmap.coefficients import CoefficientSet
from spectralmap.forward import forward_spectral_data
from spectralmap.functions import Function1D
from spectralmap.maineq import inverse_solve

A = 0.05
L = 20


def main():
    S = Function1D.from_power([0, 0.5, 1], [[0, A], [A, -A]])
    target = CoefficientSet.from_functions(2, S)
    data = forward_spectral_data(associated_matrix(target), L)
    model = CoefficientSet.zero(2)
    md = forward_spectral_data(associated_matrix(model), L)
    print("lambda_l - lambda~_l for the first rows:", np.round((data.lam - md.lam)[:5].real, 6))

    r = inverse_solve(data, model, L, model_data=md)
    x = np.linspace(0.05, 0.95, 19)
    got = r.coefficients.tau[0].func(x).real
    want = S(x).real
    print(f"\nmin sigma_min {r.sigma_min.min():.3g}, self-adjoint {r.coefficients.selfadjoint}")
    print("   x     S(x)       recovered")
    for xi, s, g in zip(x, want, got):
        print(f"  {xi:.2f}  {s: .6f}  {g: .6f}")
    print(f"max error on [0.05, 0.95]: {np.max(np.abs(got - want)):.2e}")


if __name__ == "__main__":
    main()
