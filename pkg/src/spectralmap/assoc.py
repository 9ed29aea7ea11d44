"""Associated matrices F(x) of the first-order system Y' = (F + Lambda) Y.

Only the entries on and below the diagonal are stored; the superdiagonal is
identically 1 and everything above it vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientSet, SigmaSet, format_complex, make_sigma
from .errors import RepresentationError, UnsupportedOrderError
from .functions import Function1D

CLASS_TOL = 1e-10
_CHECK_POINTS = 64


class AssociatedMatrix:
    """Lower part of a matrix function in the class F_n.

    Parameters
    ----------
    n : int
        Matrix size.
    entries : dict
        Maps 1-based ``(k, j)`` with ``k >= j`` to a :class:`Function1D`.
        Missing entries are zero.
    """

    __slots__ = ("n", "entries")

    def __init__(self, n, entries=None):
        if n < 2:
            raise UnsupportedOrderError(f"matrix size must be >= 2, got {n}")
        ents = {}
        for (k, j), f in (entries or {}).items():
            if not (1 <= j <= k <= n):
                raise RepresentationError(f"entry ({k}, {j}) lies outside the stored lower part")
            if not isinstance(f, Function1D):
                raise RepresentationError("entries must be Function1D")
            if not f.is_zero():
                ents[(k, j)] = f
        self.n = n
        self.entries = ents

    def entry(self, k, j):
        """f_{k,j} as a Function1D (the structural ones and zeros included)."""
        if j == k + 1:
            return Function1D.constant(1.0)
        if j > k + 1:
            return Function1D.zero()
        return self.entries.get((k, j), Function1D.zero())

    def breakpoints(self):
        bp = np.array([0.0, 1.0])
        for f in self.entries.values():
            bp = np.union1d(bp, f.breakpoints)
        return bp

    def values(self, x):
        """Matrix values at the points ``x``; shape ``(len(x), n, n)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((len(x), self.n, self.n), dtype=complex)
        for k in range(1, self.n):
            out[:, k - 1, k] = 1.0
        for (k, j), f in self.entries.items():
            out[:, k - 1, j - 1] = f(x)
        return out

    def lower_on_grid(self, grid):
        """Lower-part values on a ChebGrid, shape ``(n, n, grid.size)``."""
        out = np.zeros((self.n, self.n, grid.size), dtype=complex)
        for (k, j), f in self.entries.items():
            out[k - 1, j - 1] = grid.sample(f)
        return out

    def is_zero(self):
        return not self.entries

    def __repr__(self):
        return f"AssociatedMatrix(n={self.n}, nonzero={sorted(self.entries)})"


def zero_matrix(n):
    """The unperturbed matrix F0 = [delta_{k+1,j}]."""
    return AssociatedMatrix(n)


def _q_matrix(sigma: SigmaSet):
    """Sparse Q as a dict {(row, col): Function1D}, zero-based as in the construction."""
    n = sigma.n
    p = n // 2
    s = list(sigma.sigma) + [Function1D.zero()] * 2

    def sg(nu):
        return s[nu] if nu <= n - 2 else Function1D.zero()

    q = {(0, 1): sg(0) + sg(1), (1, 0): sg(0) - sg(1)}
    for k in range(1, p):
        q[(k, k)] = sg(2 * k)
    for k in range(1, n - p - 1):
        q[(k, k + 1)] = sg(2 * k + 1)
        q[(k + 1, k)] = -sg(2 * k + 1)
    return q


def associated_matrix(sigma) -> AssociatedMatrix:
    """Associated matrix of the regularized expression.

    Accepts a :class:`SigmaSet` or a :class:`CoefficientSet` (converted via
    :func:`make_sigma`).
    """
    if isinstance(sigma, CoefficientSet):
        sigma = make_sigma(sigma)
    if not isinstance(sigma, SigmaSet):
        raise RepresentationError("expected a SigmaSet or CoefficientSet")
    n = sigma.n
    if n < 2:
        raise UnsupportedOrderError(f"order must be >= 2, got {n}")
    if n == 2:
        # sigma here is the antiderivative of tau_0, i.e. -sigma_0
        s = -sigma.sigma[0]
        return AssociatedMatrix(2, {(1, 1): -s, (2, 1): -(s * s), (2, 2): s})
    p = n // 2
    q = _q_matrix(sigma)
    ents = {}
    for k in range(p + 1, n + 1):
        sign = -1.0 if (k + n + 1) % 2 else 1.0
        for j in range(1, n - p + 1):
            f = q.get((j - 1, n - k))
            if f is not None and k >= j:
                ents[(k, j)] = sign * f
    return AssociatedMatrix(n, ents)


def star_matrix(F: AssociatedMatrix) -> AssociatedMatrix:
    """Dual matrix f*_{k,j} = (-1)^(k+j+1) f_{n-j+1, n-k+1}."""
    n = F.n
    ents = {}
    for (k, j), f in F.entries.items():
        ks, js = n - j + 1, n - k + 1
        sign = -1.0 if (ks + js + 1) % 2 else 1.0
        ents[(ks, js)] = sign * f
    return AssociatedMatrix(n, ents)


@dataclass(frozen=True)
class ClassReport:
    in_Fn: bool
    selfadjoint: bool
    max_violation: float
    trace_violation: float


def check_class(F: AssociatedMatrix, tol=CLASS_TOL) -> ClassReport:
    """Check membership in F_n and the self-adjointness relation on 64 points."""
    x = np.linspace(0.0, 1.0, _CHECK_POINTS)
    V = F.values(x)
    scale = max(1.0, float(np.max(np.abs(V))))
    trace = float(np.max(np.abs(np.trace(V, axis1=1, axis2=2))))
    n = F.n
    upper = np.triu(np.ones((n, n), dtype=bool), 2)
    superdiag = np.eye(n, k=1, dtype=bool)
    shape_ok = not np.any(V[:, upper]) and np.all(V[:, superdiag] == 1.0)
    in_fn = bool(shape_ok and trace <= tol * scale)
    # f_{k,j} - (-1)^{k+j+1} conj f_{n-j+1, n-k+1}, vectorised over all (k, j)
    k = np.arange(1, n + 1)[:, None]
    j = np.arange(1, n + 1)[None, :]
    sign = np.where((k + j + 1) % 2, -1.0, 1.0)
    partner = np.conj(V[:, ::-1, ::-1].transpose(0, 2, 1))
    viol = float(np.max(np.abs(V - sign * partner)))
    return ClassReport(in_fn, bool(in_fn and viol <= tol * scale), viol, trace)


def dumps_matrix(F: AssociatedMatrix) -> str:
    """Line dump ``k j <breakpoints> | <piece0> | <piece1> ...`` of stored entries."""
    lines = []
    for (k, j) in sorted(F.entries):
        f = F.entries[(k, j)]
        parts = [" ".join(f"{b:.17g}" for b in f.breakpoints)]
        parts += [" ".join(format_complex(c) for c in piece) for piece in f.coeffs]
        lines.append(f"{k} {j} " + " | ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def loads_matrix(n, text) -> AssociatedMatrix:
    from .coefficients import parse_complex

    ents = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        head, _, rest = line.partition(" ")
        jtok, _, rest = rest.partition(" ")
        chunks = [c.split() for c in rest.split("|")]
        bp = [float(t) for t in chunks[0]]
        pieces = [[parse_complex(t) for t in c] for c in chunks[1:]]
        ents[(int(head), int(jtok))] = Function1D(bp, pieces)
    return AssociatedMatrix(n, ents)
