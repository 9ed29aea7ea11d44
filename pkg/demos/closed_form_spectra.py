"""Spectra of the zero-coefficient problems against their closed forms.

For n = 2 the Dirichlet problem gives lambda_l = -(pi l)^2 with weight
2 (pi l)^2.  For n = 4 the clamped beam gives lambda_{l,2} = rho_l^4 with
cos(rho) cosh(rho) = 1, and rho_l / pi - l tends to the constant 1/2.
"""

import numpy as np
from scipy.optimize import brentq

from spectralmap.assoc import associated_matrix
from spectralmap.coefficients import CoefficientSet
from spectralmap.forward import chi_constants, forward_spectral_data


def main():
    d2 = forward_spectral_data(associated_matrix(CoefficientSet.zero(2)), 5)
    l = np.arange(1, 6)
    print("order 2: lambda_l / -(pi l)^2 - 1")
    print(np.abs(d2.lam / -((np.pi * l) ** 2) - 1))

    d4 = forward_spectral_data(associated_matrix(CoefficientSet.zero(4)), 4)
    lam = d4.lam[d4.k == 2].real
    rho = np.array([brentq(lambda r: np.cos(r) * np.cosh(r) - 1, a, a + 2) for a in (4, 7, 10, 13)])
    print("\norder 4, k = 2: computed lambda, beam root rho^4, rho/pi - l")
    for i, (a, r) in enumerate(zip(lam, rho), start=1):
        print(f"  l={i}  {a:.12e}  {r**4:.12e}  {r / np.pi - i:.3e}")
    # the other two problems are mirror images of each other
    a, b = d4.lam[d4.k == 1], np.conj(d4.lam[d4.k == 3])
    print("\nk = 1 against conj(k = 3), relative:", np.max(np.abs(a - b) / np.abs(b)))
    print("asymptotic shifts for n = 4:", chi_constants(4))


if __name__ == "__main__":
    main()
