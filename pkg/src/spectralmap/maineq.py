"""The main equation (I - R(x)) psi(x) = psi~(x) and coefficient recovery.

A model problem with known coefficients supplies Weyl solutions and the
kernels D~; the target spectral data enter through the weights beta and the
points lambda.  Each node of a shared Chebyshev grid is solved
independently.  Index pairs (l, k) whose data coincide with the model
(xi_l = 0) contribute nothing: their two terms cancel exactly, so they are
left out of the system.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from math import comb

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import chebyshev as C

from .assoc import AssociatedMatrix, associated_matrix
from .coefficients import Antiderivative, CoefficientSet
from .errors import (
    IndexMismatchError,
    InconsistencyError,
    PivotError,
    PoleProximityError,
    RepresentationError,
    SolvabilityAlarm,
    ValidationFailure,
)
from .forward import SpectralData, forward_spectral_data, validate_spectral_data, xi_weights
from .functions import Function1D
from .ode import CollocationBVP

log = logging.getLogger(__name__)

GRID_PIECES = 8
GRID_NODES = 33
CHOP_FACTOR = 30.0
POLE_TOL = 1e-10
ALARM_SIGMA = 1e-10
BC_TOL = 1e-7


@dataclass(frozen=True)
class IndexTriple:
    """(l, k, eps): eps = 0 marks the target data, eps = 1 the model data."""

    l: int
    k: int
    eps: int


def w_scaling(l, k, x, n):
    """l^(-k) exp(-x l cot(k pi / n))."""
    return float(l) ** (-k) * np.exp(-np.asarray(x) * l * np.cos(k * np.pi / n) / np.sin(k * np.pi / n))


def default_grid_breakpoints(pieces=GRID_PIECES):
    return np.linspace(0.0, 1.0, pieces + 1)


class ModelCache:
    """Weyl and dual Weyl solutions of the model problem at every spectral point.

    Parameters
    ----------
    model : CoefficientSet or AssociatedMatrix
    data, model_data : SpectralData
        Target and model spectral data on the same index range.
    L : int
        Truncation index; rows l <= L are used.
    """

    def __init__(self, model, data: SpectralData, model_data: SpectralData, L=None,
                 pieces=GRID_PIECES, nodes=GRID_NODES, check_bc=True):
        F = model if isinstance(model, AssociatedMatrix) else associated_matrix(model)
        if data.n != F.n or model_data.n != F.n:
            raise IndexMismatchError("orders of data, model data and model problem differ")
        L = data.tables()[0].shape[0] if L is None else L
        data, model_data = data.truncated(L), model_data.truncated(L)
        self.n = n = F.n
        self.L = L
        self.F = F
        self.xi = xi_weights(data, model_data)
        bp = default_grid_breakpoints(pieces)
        self.bvp = CollocationBVP(F, nodes, breakpoints=bp)
        self.dual = CollocationBVP.dual(F, nodes, breakpoints=bp)
        self.grid = self.bvp.grid
        lam, beta = data.tables()
        mlam, mbeta = model_data.tables()
        # active (l, k) pairs: rows that differ from the model
        self.pairs = [(l, k) for l in range(1, L + 1) for k in range(1, n) if self.xi[l - 1] > 0]
        self.triples = [IndexTriple(l, k, e) for (l, k) in self.pairs for e in (0, 1)]
        self.lam = np.array([(lam if t.eps == 0 else mlam)[t.l - 1, t.k - 1] for t in self.triples])
        self.beta = np.array([(beta if t.eps == 0 else mbeta)[t.l - 1, t.k - 1] for t in self.triples])
        m = len(self.triples)
        X = self.grid.size
        self.phi = np.empty((m, n, X), dtype=complex)
        self.star = np.empty((m, n, X), dtype=complex)
        for i, t in enumerate(self.triples):
            self.phi[i] = self.bvp.weyl(t.k + 1, self.lam[i])
            self.star[i] = self.dual.weyl(n - t.k + 1, self.lam[i])
        if check_bc:
            self.check_boundary_conditions()

    def check_boundary_conditions(self, tol=BC_TOL):
        n = self.n
        for i, t in enumerate(self.triples):
            for Y, k in ((self.phi[i], t.k + 1), (self.star[i], n - t.k + 1)):
                scale = max(1.0, float(np.max(np.abs(Y[:, 0]))))
                err = max(
                    np.max(np.abs(Y[: k - 1, 0])) if k > 1 else 0.0,
                    abs(Y[k - 1, 0] - 1.0),
                    np.max(np.abs(Y[: n - k, -1])) / scale if k < n else 0.0,
                )
                if err > tol:
                    raise RepresentationError(f"cached Weyl solution at {t} misses its boundary conditions ({err:.2g})")

    def weyl(self, k, lam):
        return self.bvp.weyl(k, lam)

    def dual_weyl(self, k, mu):
        return self.dual.weyl(k, mu)


def _kernel_from_products(grid, prod, a, b, n, mu, lam):
    """D~_{a,b}(x, mu, lam) on the grid from the integrand Phi*_a(mu) Phi_b(lam)."""
    I = grid.cumint(prod, axis=-1)
    if a + b > n + 1:
        return I
    if a + b < n + 1:
        return I - I[..., -1:]
    gap = lam - mu
    if np.any(np.abs(gap) <= POLE_TOL * np.maximum(1.0, np.abs(lam))):
        raise PoleProximityError("D kernel evaluated at lambda = mu where it has a pole")
    return I + ((-1) ** (a + 1) / gap)[..., None]


def d_kernel(cache: ModelCache, k, k0, mu, lam):
    """D~_{k,k0}(x, mu, lambda) at every grid node, by cumulative quadrature."""
    n = cache.n
    if not (1 <= k <= n and 1 <= k0 <= n):
        raise RepresentationError("kernel indices must lie in 1..n")
    z = cache.dual_weyl(k, mu)
    y = cache.weyl(k0, lam)
    return _kernel_from_products(cache.grid, z[0] * y[0], k, k0, n, np.asarray(mu), np.asarray(lam))


def bracket(z, y):
    """<z, y> = sum_j (-1)^j z^[j] y^[n-1-j] along the leading axis."""
    n = z.shape[0]
    return sum((-1) ** j * z[j] * y[n - 1 - j] for j in range(n))


def d_kernel_bracket(cache: ModelCache, k, k0, mu, lam):
    """Same kernel from the bracket formula; only valid away from lambda = mu."""
    z = cache.dual_weyl(k, mu)
    y = cache.weyl(k0, lam)
    return bracket(z, y) / (lam - mu)


def g_matrix(cache: ModelCache):
    """G~_{v,v0}(x) for all active triples; shape (m, m, grid.size)."""
    n = cache.n
    ks = np.array([t.k for t in cache.triples])
    Z = cache.star[:, 0, :]
    Y = cache.phi[:, 0, :]
    m = len(ks)
    G = np.empty((m, m, cache.grid.size), dtype=complex)
    for i in range(m):
        a = n - ks[i] + 1
        row = np.empty((m, cache.grid.size), dtype=complex)
        prod = Z[i][None, :] * Y
        I = cache.grid.cumint(prod, axis=-1)
        for j in range(m):
            b = ks[j] + 1
            if a + b > n + 1:
                row[j] = I[j]
            elif a + b < n + 1:
                row[j] = I[j] - I[j, -1]
            else:
                gap = cache.lam[j] - cache.lam[i]
                if abs(gap) <= POLE_TOL * max(1.0, abs(cache.lam[j])):
                    raise PoleProximityError(f"{cache.triples[i]} and {cache.triples[j]} share lambda")
                row[j] = I[j] + (-1) ** (a + 1) / gap
        G[i] = (-1) ** (n - ks[i]) * cache.beta[i] * row
    return G


@dataclass
class TruncatedMainEquation:
    x: np.ndarray
    triples: list
    R: np.ndarray
    psi_tilde: np.ndarray
    xi: np.ndarray
    w: np.ndarray
    sigma_min: np.ndarray = None
    condition: np.ndarray = None


def _pair_scalings(cache: ModelCache):
    """w_{l,k}(x) per pair and xi per pair."""
    x = cache.grid.x
    w = np.array([w_scaling(l, k, x, cache.n) for (l, k) in cache.pairs]).reshape(len(cache.pairs), x.size)
    xi = np.array([cache.xi[l - 1] for (l, _) in cache.pairs])
    return w, xi


def assemble(cache: ModelCache) -> TruncatedMainEquation:
    """R~(x) and psi~(x) at every grid node, block by block.

    Returns R of shape (X, m, m) with rows and columns ordered as the
    active triples.
    """
    P = len(cache.pairs)
    X = cache.grid.size
    G = g_matrix(cache).reshape(P, 2, P, 2, X)
    w, xi = _pair_scalings(cache)
    left = np.zeros((P, 2, 2))
    left[:, 0, 0], left[:, 0, 1], left[:, 1, 1] = 1 / xi, -1 / xi, 1.0
    right = np.zeros((P, 2, 2))
    right[:, 0, 0], right[:, 0, 1], right[:, 1, 1] = xi, 1.0, -1.0
    # Gt[p0, a, p, b, x] = G[(p, b), (p0, a)]
    Gt = G.transpose(2, 3, 0, 1, 4)
    ratio = w[None, :, :] / w[:, None, :]
    R = np.einsum("qea,qapbx,pbf,qpx->xqepf", left, Gt, right, ratio, optimize=True)
    R = R.reshape(X, 2 * P, 2 * P)
    phit = cache.phi[:, 0, :].reshape(P, 2, X)
    psit = np.empty((P, 2, X), dtype=complex)
    psit[:, 0] = (phit[:, 0] - phit[:, 1]) / (w * xi[:, None])
    psit[:, 1] = phit[:, 1] / w
    return TruncatedMainEquation(cache.grid.x, cache.triples, R, psit.reshape(2 * P, X).T, xi, w)


@dataclass
class InverseSolveResult:
    psi: np.ndarray
    phi: np.ndarray
    sigma_min: np.ndarray
    condition: np.ndarray
    residual: np.ndarray
    cache: ModelCache
    weyl: dict = field(default_factory=dict)
    coefficients: CoefficientSet = None
    recovery: object = None
    report: object = None


def solve(eq: TruncatedMainEquation, alarm=ALARM_SIGMA):
    """Dense solve at every node; records sigma_min, condition and residual."""
    X, m, _ = eq.R.shape
    psi = np.empty((X, m), dtype=complex)
    smin = np.empty(X)
    cond = np.empty(X)
    res = np.empty(X)
    I = np.eye(m)
    for i in range(X):
        A = I - eq.R[i]
        if m == 0:
            psi[i], smin[i], cond[i], res[i] = eq.psi_tilde[i], 1.0, 1.0, 0.0
            continue
        s = sla.svdvals(A)
        smin[i], cond[i] = s[-1], s[0] / s[-1] if s[-1] > 0 else np.inf
        if s[-1] < alarm:
            raise SolvabilityAlarm(f"I - R is singular at x={eq.x[i]:.6g} (sigma_min={s[-1]:.3g})", sigma_min=s[-1])
        psi[i] = np.linalg.solve(A, eq.psi_tilde[i])
        res[i] = np.max(np.abs(A @ psi[i] - eq.psi_tilde[i]))
    eq.sigma_min, eq.condition = smin, cond
    return psi, smin, cond, res


def main_residual(eq: TruncatedMainEquation, psi):
    """max_v |((I - R) psi - psi~)_v| at every node for a given psi of shape (X, m)."""
    r = psi - np.einsum("xij,xj->xi", eq.R, psi) - eq.psi_tilde
    return np.max(np.abs(r), axis=1) if r.shape[1] else np.zeros(r.shape[0])


def psi_from_phi(cache: ModelCache, phi):
    """Apply the xi/w transform to values phi of shape (m, X); returns (X, m)."""
    P = len(cache.pairs)
    X = cache.grid.size
    w, xi = _pair_scalings(cache)
    ph = phi.reshape(P, 2, X)
    psi = np.empty((P, 2, X), dtype=complex)
    psi[:, 0] = (ph[:, 0] - ph[:, 1]) / (w * xi[:, None])
    psi[:, 1] = ph[:, 1] / w
    return psi.reshape(2 * P, X).T


def phi_from_psi(cache: ModelCache, psi):
    """Inverse transform: psi of shape (X, m) to phi of shape (m, X)."""
    P = len(cache.pairs)
    X = cache.grid.size
    w, xi = _pair_scalings(cache)
    ps = psi.T.reshape(P, 2, X)
    phi = np.empty((P, 2, X), dtype=complex)
    phi[:, 1] = w * ps[:, 1]
    phi[:, 0] = w * (xi[:, None] * ps[:, 0] + ps[:, 1])
    return phi.reshape(2 * P, X)


def reconstruct_weyl(result: InverseSolveResult, lam, ks=None):
    """Phi_k(x, lambda) for k in ``ks`` (default 1..n) at the grid nodes.

    Phi_k = Phi~_k + sum_v (-1)^(eps+n-k_v) beta_v phi_v(x) D~_{n-k_v+1,k}(x, lambda_v, lambda).
    Returns a dict {k: values}.
    """
    cache = result.cache
    n = cache.n
    ks = range(1, n + 1) if ks is None else ks
    lam = complex(lam)
    gap = np.abs(cache.lam - lam)
    if np.any(gap <= 1e-8 * max(1.0, abs(lam))):
        raise PoleProximityError(f"lambda={lam:.6g} coincides with a spectral point of the system")
    out = {}
    kv = np.array([t.k for t in cache.triples])
    ev = np.array([t.eps for t in cache.triples])
    coef = (-1.0) ** (ev + n - kv) * cache.beta
    for k0 in ks:
        base = cache.weyl(k0, lam)
        y = base[0]
        total = base[0].copy()
        if len(kv):
            prod = cache.star[:, 0, :] * y[None, :]
            I = cache.grid.cumint(prod, axis=-1)
            D = np.empty_like(I)
            for i, kk in enumerate(kv):
                a = n - kk + 1
                if a + k0 > n + 1:
                    D[i] = I[i]
                elif a + k0 < n + 1:
                    D[i] = I[i] - I[i, -1]
                else:
                    D[i] = I[i] + (-1) ** (a + 1) / (lam - cache.lam[i])
            total = total + np.sum(coef[:, None] * result.phi * D, axis=0)
        out[k0] = total
    result.weyl[lam] = out
    return out


# -- coefficient recovery ---------------------------------------------------------


def _test_functions(n, count, side=0):
    """Chebyshev series (in t on [-1, 1]) of test functions times T_j(t), j < count.

    The factor is (1 - t^2)^q with q = n - n // 2, or (1 - t)^q for
    ``side = -1`` (free at t = -1) and (1 + t)^q for ``side = 1``.  Vanishing
    to order q makes every boundary term of the weak form zero at that end.
    """
    q = n - n // 2
    factor = {0: [0.5, 0.0, -0.5], -1: [1.0, -1.0], 1: [1.0, 1.0]}[side]  # 1 - t^2 = (T0 - T2) / 2
    bump = C.chebpow(np.array(factor), q)
    out = []
    for j in range(count):
        e = np.zeros(j + 1)
        e[j] = 1.0
        out.append(C.chebmul(bump, e))
    return out


def _ell_terms(n):
    """Weak-form terms of ell_n: list of (nu, ydeg, vdeg, sign).

    int tau_nu y^(ydeg) v^(vdeg) dx enters the weak form with ``sign``; the
    tau_0 terms are handled separately through its antiderivative.
    """
    terms = []
    for k in range(1, n // 2):
        terms.append((2 * k, k, k, (-1) ** k))
    for k in range((n - 1) // 2):
        terms.append((2 * k + 1, k, k + 1, (-1) ** (k + 1)))
        terms.append((2 * k + 1, k + 1, k, (-1) ** k))
    return terms


def _chop(coeffs, factor=CHOP_FACTOR):
    """Drop the roundoff plateau of a Chebyshev series.

    The plateau level is the median magnitude of the last half of the
    coefficients; differentiation would amplify it by the degree squared per
    order.
    """
    mag = np.abs(coeffs)
    floor = np.median(mag[-max(2, len(mag) // 2):])
    big = np.flatnonzero(mag > factor * floor)
    return coeffs[: big[-1] + 1] if big.size else coeffs[:1]


def weak_form_windows(breakpoints):
    """Test windows ``(a, b, side)`` for the weak form.

    Every grid piece, the windows between neighbouring piece midpoints (they
    test the unknowns near interior breakpoints) and the two end pieces once
    more with test functions free at x = 0 or x = 1.  The end windows carry
    boundary terms built from the data; without them tau_0 concentrated at an
    end point would be invisible.
    """
    bp = np.asarray(breakpoints, dtype=float)
    mid = 0.5 * (bp[:-1] + bp[1:])
    return ([(a, b, 0) for a, b in zip(bp[:-1], bp[1:])]
            + [(a, b, 0) for a, b in zip(mid[:-1], mid[1:])]
            + [(bp[0], bp[1], -1), (bp[-2], bp[-1], 1)])


def _end_derivatives(coeffs, t, h, count):
    """Derivatives 0..count-1 at t of a Chebyshev series on a piece of length h."""
    return np.array([C.chebval(t, C.chebder(coeffs, m) if m else coeffs) * (2.0 / h) ** m
                     for m in range(count)])


def _weak_system(weyl_sets, grid, n, degree, tests, breakpoints=None):
    """Rows of the weak form and the continuity constraints on the unknowns.

    The strong form is y^(n) + sum_nu D^p (tau_nu D^r y) + tau_0 y = lambda y
    with the (nu, r, p) of :func:`_ell_terms`; tau_0 enters through S.  The
    unknowns are polynomials on the pieces of ``breakpoints`` (default: the
    grid pieces); y is interpolated on the grid pieces.
    """
    gb = grid.breakpoints
    ub = gb if breakpoints is None else np.asarray(breakpoints, dtype=float)
    npc = len(ub) - 1
    d1 = degree + 1
    terms = _ell_terms(n)
    nunk = (n - 1) * npc * d1
    m2 = n // 2
    unit = np.eye(d1)

    def col(nu, piece):
        return slice((nu * npc + piece) * d1, (nu * npc + piece + 1) * d1)

    def locate(edges, x):
        return min(max(int(np.searchsorted(edges, x, side="right")) - 1, 0), len(edges) - 2)

    # Gauss-Legendre on the interpolant of y, exact for every product of test
    # function, y and basis function on a sub-interval
    nq = grid.deg + tests + 2 * n + degree
    tq, wq = np.polynomial.legendre.leggauss(nq)
    cys = [[_chop(grid._Vinv @ np.asarray(yv)[grid.piece_slice(i)]) for i in range(grid.npieces)]
           for _, ys in weyl_sets for yv in ys.values()]
    lams = [lam for lam, ys in weyl_sets for _ in ys]
    rows, rhs = [], []
    for a, b, side in weak_form_windows(ub):
        tfun = _test_functions(n, tests, side)
        hw = b - a
        cuts = np.unique(np.concatenate([[a, b], gb[(gb > a) & (gb < b)], ub[(ub > a) & (ub < b)]]))
        blocks = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            i, u = locate(gb, 0.5 * (lo + hi)), locate(ub, 0.5 * (lo + hi))
            xq = 0.5 * (lo + hi) + 0.5 * (hi - lo) * tq
            h, hu = gb[i + 1] - gb[i], ub[u + 1] - ub[u]
            tp = (2 * xq - gb[i] - gb[i + 1]) / h
            tu = (2 * xq - ub[u] - ub[u + 1]) / hu
            tw = (2 * xq - a - b) / hw
            vd = np.array([[C.chebval(tw, C.chebder(v, m) if m else v) * (2.0 / hw) ** m
                            for v in tfun] for m in range(n + 1)])  # (n + 1, tests, nq)
            blocks.append((i, u, tp, h, wq * (0.5 * (hi - lo)), vd, C.chebvander(tu, degree)))
        if side:
            # boundary data at the free end: data piece, unknown piece, v^(j) there
            pe, ue = (0, 0) if side < 0 else (grid.npieces - 1, npc - 1)
            he, hu = gb[pe + 1] - gb[pe], ub[ue + 1] - ub[ue]
            ve = np.array([[C.chebval(float(side), C.chebder(v, m) if m else v) * (2.0 / hw) ** m
                            for v in tfun] for m in range(n)])  # (n, tests)
            # tau^(i) at the end as rows over the basis coefficients
            te = np.array([_end_derivatives(unit[j], float(side), hu, n) for j in range(d1)]).T
        for cy, lam in zip(cys, lams):
            A = np.zeros((tests, nunk), dtype=complex)
            r = np.zeros(tests, dtype=complex)
            for i, u, tp, h, w, vd, Tb in blocks:
                ders = _end_derivatives(cy[i], tp, h, m2 + 1)
                # tau_0 y v = S' y v  ->  -S (y v)'
                yv_d = ders[1] * vd[0] + ders[0] * vd[1]
                A[:, col(0, u)] -= (w * yv_d) @ Tb
                for nu, yd, vdeg, sg in terms:
                    A[:, col(nu, u)] += sg * (w * ders[yd] * vd[vdeg]) @ Tb
                # y^(n) v integrated by parts down to y^(m) v^(n-m), m = n // 2
                r += (w * (lam * ders[0] * vd[0] - (-1) ** (n - m2) * ders[m2] * vd[n - m2])).sum(axis=1)
            if side:
                # int D^p(g) v = sum_{j<p} (-1)^j [g^(p-1-j) v^(j)] + (-1)^p int g v^(p)
                ye = _end_derivatives(cy[pe], float(side), he, n)
                A[:, col(0, ue)] += side * np.outer(ye[0] * ve[0], te[0])
                for nu, rd, p, _ in terms:
                    for j in range(p):
                        dg = p - 1 - j
                        # (tau y^(r))^(dg) = sum_i binom(dg, i) tau^(i) y^(r + dg - i)
                        g = sum(comb(dg, i) * ye[rd + dg - i] * te[i] for i in range(dg + 1))
                        A[:, col(nu, ue)] += side * (-1) ** j * np.outer(ve[j], g)
                r -= side * sum((-1) ** j * ye[n - 1 - j] * ve[j] for j in range(n - m2))
            # equal weight per window and function: Weyl functions with k > 1
            # are small near x = 0 but carry the information there
            scale = max(np.max(np.abs(A)), np.max(np.abs(r)), np.finfo(float).tiny)
            rows.append(A / scale)
            rhs.append(r / scale)
    rows, rhs = np.concatenate(rows), np.concatenate(rhs)
    left, right = C.chebvander(np.array([-1.0, 1.0]), degree)
    cons = []
    e = np.zeros(nunk)
    e[col(0, 0)] = left
    cons.append(e)
    for nu in [0] + list(range(2, n - 1)):
        for i in range(npc - 1):
            e = np.zeros(nunk)
            e[col(nu, i)] = right
            e[col(nu, i + 1)] -= left
            cons.append(e)
    return rows, rhs, np.array(cons)



def recover_coefficients(weyl_sets, grid, n, degree=6, tests=None, check_tol=1e-6, breakpoints=None):
    """Coefficients tau_nu from scalar Weyl functions at one or more lambda.

    ``weyl_sets`` is a list of ``(lam, {k: values on grid})``.  Every function
    y satisfies ell_n(y) = lambda y.  Tested against smooth functions on
    windows, this is linear in the unknown coefficients and needs derivatives
    of y up to order n / 2 inside the windows and up to order n - 1 at x = 0
    and x = 1.  Each tau_nu is a polynomial of ``degree`` on the pieces of
    ``breakpoints`` (default: the grid pieces; longer pieces amplify the
    roundoff in the derivatives of y less).  tau_0 enters through its
    antiderivative S, which is continuous with S(0) = 0; tau_nu for nu >= 2
    is continuous.
    """
    if n < 2:
        raise RepresentationError("order must be >= 2")
    bp = grid.breakpoints if breakpoints is None else np.asarray(breakpoints, dtype=float)
    npc = len(bp) - 1
    d1 = degree + 1
    tests = (n - 1) * d1 + 4 if tests is None else tests
    A, b, cons = _weak_system(weyl_sets, grid, n, degree, tests, bp)
    Nsp = sla.null_space(cons)
    AN = A @ Nsp
    z, *_ = np.linalg.lstsq(AN, b, rcond=None)
    c = Nsp @ z
    resid = float(np.max(np.abs(AN @ z - b)))
    funcs = []
    for nu in range(n - 1):
        pieces = [c[(nu * npc + i) * d1:(nu * npc + i + 1) * d1] for i in range(npc)]
        funcs.append(Function1D(bp, pieces))
    tau = (Antiderivative(funcs[0]),) + tuple(funcs[1:])
    imag = selfadjoint_defect(n, tau)
    if imag <= check_tol:
        # numerical noise only: keep the real part of i^(n+nu) tau_nu
        tau = tuple(_real_part(n, nu, t) for nu, t in enumerate(tau))
    return RecoveredCoefficients(CoefficientSet(n, tau), resid, imag)


@dataclass
class RecoveredCoefficients:
    coefficients: CoefficientSet
    fit_residual: float
    selfadjoint_defect: float


def selfadjoint_defect(n, tau):
    """max |Im(i^(n+nu) tau_nu)| relative to the size of tau_nu, on 64 points."""
    x = np.linspace(0.0, 1.0, 64)
    worst = 0.0
    for nu, t in enumerate(tau):
        f = t.func if isinstance(t, Antiderivative) else t
        v = 1j ** (n + nu) * f(x)
        worst = max(worst, float(np.max(np.abs(v.imag)) / max(1.0, np.max(np.abs(v)))))
    return worst


def _real_part(n, nu, t):
    f = t.func if isinstance(t, Antiderivative) else t
    rot = 1j ** (n + nu)
    g = Function1D(f.breakpoints, [(rot * c).real / rot for c in f.coeffs])
    return Antiderivative(g) if isinstance(t, Antiderivative) else g


def default_reconstruction_points(n, cache: ModelCache):
    """Two points off the real axis, where no eigenvalue of a self-adjoint
    problem lies; |lambda| = 20 keeps the Weyl functions of moderate size."""
    r = 20.0
    return [complex(0.0, r), complex(r, r)]


def recovery_candidates(n, grid):
    """(degree, breakpoints) tried for the coefficient fit after the main equation.

    Orders 2 and 3 use the grid pieces with degree 12, enough for the
    truncation error to dominate.  From order 4 on the fit amplifies the
    roundoff in the derivatives of y strongly with degree and with short
    pieces, so smooth coefficients want two pieces of low degree while
    oscillating ones need the grid pieces.  Several resolutions are tried and
    :func:`inverse_solve` keeps the one closest to self-adjoint.
    """
    if n <= 3:
        return [(12, np.asarray(grid.breakpoints))]
    return [(6, np.linspace(0.0, 1.0, m + 1)) for m in (2, 4)] + [(8, np.linspace(0.0, 1.0, m + 1)) for m in (4, 8)]


def inverse_solve(data: SpectralData, model: CoefficientSet, L=None, model_data=None,
                  pieces=GRID_PIECES, nodes=GRID_NODES, lam_points=None, degree=None,
                  force=False, perturb_model=None, eig_nodes=129, recovery_breakpoints=None):
    """Spectral data -> coefficients through the main equation.

    The model's spectral data are computed unless given.  Data that fail
    validation raise :class:`ValidationFailure` unless ``force`` is set.  If
    the only failure is a shared eigenvalue with the model and
    ``perturb_model`` is given, the model is shifted by that amount (all its
    eigenvalues move by the same constant) and validation is repeated.
    ``degree`` and ``recovery_breakpoints`` fix the coefficient fit; by
    default the candidates of :func:`recovery_candidates` are tried.
    """
    n = data.n
    L = data.tables()[0].shape[0] if L is None else L
    data = data.truncated(L)
    if model_data is None:
        model_data = forward_spectral_data(associated_matrix(model), L, eig_nodes)
    model_data = model_data.truncated(L)
    report = validate_spectral_data(data, model_data)
    if not report.checks["non-overlap"].passed and perturb_model:
        log.warning("data and model spectra overlap; shifting the model by %g", perturb_model)
        model, model_data = shift_model(model, model_data, perturb_model)
        report = validate_spectral_data(data, model_data)
    if not report.overall_pass:
        if not force:
            raise ValidationFailure("spectral data failed: " + ", ".join(report.failed()), report)
        log.warning("continuing despite failed checks: %s", ", ".join(report.failed()))
    cache = ModelCache(model, data, model_data, L, pieces, nodes)
    eq = assemble(cache)
    psi, smin, cond, res = solve(eq)
    phi = phi_from_psi(cache, psi)
    result = InverseSolveResult(psi, phi, smin, cond, res, cache)
    result.report = report
    pts = lam_points or default_reconstruction_points(n, cache)
    sets = [(lam, reconstruct_weyl(result, lam)) for lam in pts]
    candidates = recovery_candidates(n, cache.grid)
    if degree is not None or recovery_breakpoints is not None:
        candidates = [(candidates[0][0] if degree is None else degree,
                       candidates[0][1] if recovery_breakpoints is None else recovery_breakpoints)]
    fits = [recover_coefficients(sets, cache.grid, n, degree=d, breakpoints=bp) for d, bp in candidates]
    result.recovery = min(fits, key=lambda f: f.selfadjoint_defect)
    result.coefficients = result.recovery.coefficients
    log.info("coefficient fit residual %.3g, self-adjoint defect %.3g",
             result.recovery.fit_residual, result.recovery.selfadjoint_defect)
    return result


def shift_model(model: CoefficientSet, model_data: SpectralData, eps):
    """Add eps to tau_0; every eigenvalue moves by eps, weights are unchanged."""
    S = model.tau[0].func + Function1D.from_power([0.0, 1.0], [[0.0, eps]])
    shifted = CoefficientSet(model.n, (Antiderivative(S),) + tuple(model.tau[1:]))
    data = SpectralData(model_data.n, model_data.l, model_data.k, model_data.lam + eps, model_data.beta,
                        provenance="shifted model")
    return shifted, data


def check_lambda_independence(sets_a, sets_b, grid, n, tol=1e-4, degree=6):
    """Recover coefficients at two spectral points separately and compare."""
    ca = recover_coefficients(sets_a, grid, n, degree).coefficients
    cb = recover_coefficients(sets_b, grid, n, degree).coefficients
    x = np.linspace(0.05, 0.95, 91)
    err = 0.0
    for ta, tb in zip(ca.tau, cb.tau):
        fa = ta.func if isinstance(ta, Antiderivative) else ta
        fb = tb.func if isinstance(tb, Antiderivative) else tb
        err = max(err, float(np.max(np.abs(fa(x) - fb(x)))))
    if err > tol:
        raise InconsistencyError(f"coefficients depend on lambda ({err:.3g})")
    return err
