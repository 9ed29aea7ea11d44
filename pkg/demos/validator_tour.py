"""What the spectral-data checks report, on clean data and with one violation each.

Uses the fourth-order zero problem as the model.  Clean data change the
first row; each violation then breaks one property of admissible data.
"""

import numpy as np

from spectralmap.assoc import associated_matrix
from spectralmap.coefficients import CoefficientSet
from spectralmap.forward import forward_spectral_data, validate_spectral_data

L = 6


def entry(d, l, k):
    return np.flatnonzero((d.l == l) & (d.k == k))[0]


def scale_row(d, l, lam_factor, beta_factor=1.0):
    for k in range(1, d.n):
        i = entry(d, l, k)
        d = d.replace(l, k, lam=d.lam[i] * lam_factor, beta=d.beta[i] * beta_factor)
    return d


def main():
    md = forward_spectral_data(associated_matrix(CoefficientSet.zero(4)), L)
    clean = scale_row(md, 1, 1.05, 1.1)
    i = entry(clean, 1, 2)
    cases = {
        "clean": clean,
        "flipped beta_(1,2)": clean.replace(1, 2, beta=-clean.beta[i]),
        "row 1 back on the model eigenvalue": clean.replace(1, 2, lam=md.lam[entry(md, 1, 2)]),
        "last row moved": scale_row(clean, L, 1.05),
    }
    for name, data in cases.items():
        rep = validate_spectral_data(data, md)
        print(f"== {name}: {'pass' if rep.overall_pass else 'failed ' + ', '.join(rep.failed())}")
        print(rep, "\n")


if __name__ == "__main__":
    main()
