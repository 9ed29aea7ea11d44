"""First-order systems Y' = (F(x) + Lambda) Y and their boundary value problems.

Two engines live here.  :func:`fundamental_matrix` integrates the initial
value problem with an adaptive Runge-Kutta scheme; it is accurate for
moderate |lambda| and serves as the reference for closed forms and
identities.  :class:`CollocationBVP` handles the two-point problems (Weyl
solutions, characteristic determinants): local transfer matrices come from
Chebyshev collocation on short segments, and a backward QR sweep carries
the right-end boundary subspace to x = 0.  The sweep never forms products
of growing exponentials, so it stays accurate when e^{rho omega x} spreads
over many orders of magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import chebyshev as C
from scipy.integrate import solve_ivp

from .assoc import AssociatedMatrix, star_matrix
from .errors import AccuracyError, ConditioningError, RepresentationError
from .grid import ChebGrid, _reference_matrices

DEFAULT_NODES = 129
COND_LIMIT = 1e13
SEG_NODES = 33
SEG_RHO_H = 4.0
SEG_MIN = 2
DIFF_STEP = 1e-6


@dataclass(frozen=True)
class SpectralPoint:
    """Spectral parameter lambda together with a root rho, rho**n = lambda."""

    lam: complex
    rho: complex
    n: int

    @classmethod
    def from_lambda(cls, lam, n):
        """Principal branch: arg rho in (-pi/n, pi/n]."""
        lam = complex(lam)
        rho = lam ** (1.0 / n) if lam != 0 else 0j
        return cls(lam, rho, n)

    @classmethod
    def from_rho(cls, rho, n):
        rho = complex(rho)
        return cls(rho**n, rho, n)


def as_point(lam, n):
    return lam if isinstance(lam, SpectralPoint) else SpectralPoint.from_lambda(lam, n)


@dataclass
class MatrixTrajectory:
    """Solution matrix sampled on grid nodes.

    ``values[i]`` is the n x n matrix at ``x[i]``; column k holds the
    quasi-derivative vector of the k-th solution.
    """

    x: np.ndarray
    values: np.ndarray
    point: SpectralPoint
    kind: str
    source: AssociatedMatrix
    grid: ChebGrid = None

    def at(self, xq):
        if self.grid is None:
            raise RepresentationError("trajectory has no grid for interpolation")
        v = np.moveaxis(self.values, 0, -1)
        return np.moveaxis(self.grid.interp(v, xq), -1, 0)

    def determinant(self):
        return np.linalg.det(self.values)

    def dumps_csv(self):
        """CSV with x and the real/imaginary parts of every entry."""
        n = self.values.shape[1]
        head = ["x"]
        for j in range(1, n + 1):
            for k in range(1, n + 1):
                head += [f"re_{j}{k}", f"im_{j}{k}"]
        rows = [",".join(head)]
        for xi, V in zip(self.x, self.values):
            flat = V.reshape(-1)
            vals = [f"{xi:.17g}"]
            for z in flat:
                vals += [f"{z.real:.17g}", f"{z.imag:.17g}"]
            rows.append(",".join(vals))
        return "\n".join(rows) + "\n"


def _piece_entry_coeffs(F, grid):
    """Per grid piece: list of ((k, j), Chebyshev coefficients on that piece)."""
    refined = {key: f.refine(grid.breakpoints) for key, f in F.entries.items()}
    return [
        [((k - 1, j - 1), f.coeffs[i]) for (k, j), f in refined.items()]
        for i in range(grid.npieces)
    ]


def fundamental_matrix(F: AssociatedMatrix, lam, nodes=DEFAULT_NODES, rtol=1e-10, atol=1e-12):
    """Fundamental matrix C(x, lambda) with C(0) = I on a Chebyshev grid.

    The system is integrated piece by piece between the breakpoints of F with
    the DOP853 Runge-Kutta pair in complex arithmetic.  The relative
    tolerance is tightened in proportion to |rho|.
    """
    n = F.n
    point = as_point(lam, n)
    grid = ChebGrid(F.breakpoints(), nodes)
    pieces = _piece_entry_coeffs(F, grid)
    rtol_eff = max(rtol / max(1.0, abs(point.rho)), 1e-13)
    base = np.eye(n, k=1, dtype=complex)
    base[n - 1, 0] += point.lam
    Y = np.eye(n, dtype=complex).reshape(-1)
    out = np.empty((grid.size, n, n), dtype=complex)
    for i in range(grid.npieces):
        a, b = grid.breakpoints[i], grid.breakpoints[i + 1]
        idx = [pos for pos, _ in pieces[i]]
        if idx:
            rows = np.array([p[0] for p in idx])
            cols = np.array([p[1] for p in idx])
            width = max(len(c) for _, c in pieces[i])
            stack = np.zeros((width, len(idx)), dtype=complex)
            for m, (_, c) in enumerate(pieces[i]):
                stack[: len(c), m] = c

        def rhs(x, y, a=a, b=b):
            A = base.copy()
            if idx:
                A[rows, cols] += C.chebval((2 * x - a - b) / (b - a), stack)
            return (A @ y.reshape(n, n)).reshape(-1)

        xs = grid.piece_nodes[i]
        sol = solve_ivp(
            rhs, (a, b), Y, method="DOP853", t_eval=np.clip(xs, a, b), rtol=rtol_eff, atol=atol
        )
        if not sol.success:
            raise AccuracyError(f"integrator failed on [{a}, {b}]: {sol.message}", achieved=None)
        out[grid.piece_slice(i)] = sol.y.T.reshape(-1, n, n)
        Y = sol.y[:, -1]
    return MatrixTrajectory(grid.x.copy(), out, point, "fundamental-at-0", F, grid)


def quasi_derivatives(F: AssociatedMatrix, y, order=None):
    """Quasi-derivatives y^[0], ..., y^[order] of a Function1D ``y``.

    y^[k] = (y^[k-1])' - sum_{j <= k} f_{k,j} y^[j-1].  ``order`` defaults to
    n - 1.
    """
    order = F.n - 1 if order is None else order
    q = [y]
    for k in range(1, order + 1):
        nxt = q[-1].deriv()
        for j in range(1, min(k, F.n) + 1):
            if (k, j) in F.entries:
                nxt = nxt - F.entries[(k, j)] * q[j - 1]
        q.append(nxt)
    return q


quasi_derivative_column = quasi_derivatives


def lagrange_bracket(z, y):
    """Alternating sum sum_k (-1)^k z^[k] y^[n-k-1] along the first axis."""
    z = np.asarray(z)
    y = np.asarray(y)
    if z.shape[0] != y.shape[0]:
        raise RepresentationError("bracket operands must have the same length")
    n = z.shape[0]
    signs = (-1.0) ** np.arange(n)
    signs = signs.reshape((n,) + (1,) * (z.ndim - 1))
    return np.sum(signs * z * y[::-1], axis=0)


class CollocationBVP:
    """Two-point problems for Y' = (F + c Lambda) Y by rectangular collocation.

    The global collocation matrix (integrated-form rows on a composite
    Lobatto grid) gives the discrete pencil; values at a given lambda come
    from the segment march.  Components are scaled by s**j with
    s = max(1, |lambda|**(1/n)) so all rows stay of unit size for large
    |lambda|.

    ``lam_sign`` multiplies lambda in the (n, 1) entry; the dual system uses
    (-1)**n.
    """

    def __init__(self, F: AssociatedMatrix, nodes=DEFAULT_NODES, breakpoints=None, lam_sign=1):
        bp = F.breakpoints() if breakpoints is None else np.union1d(breakpoints, F.breakpoints())
        self.F = F
        self.n = n = F.n
        self.lam_sign = lam_sign
        self.grid = ChebGrid(bp, nodes)
        self.N = N = nodes - 1
        t, D, Q, P, y, Vinv = _reference_matrices(N)
        npc = self.grid.npieces
        self.size = npc * n * (N + 1)
        diff = np.eye(N + 1)[1:]
        diff[:, 0] -= 1.0
        self._Dif = diff
        self._W = [Q[1:] * (h / 2.0) for h in self.grid.lengths()]
        self._Fy = []
        for i in range(npc):
            ys = self.grid.piece_nodes[i]
            vals = {}
            for (k, j), f in F.entries.items():
                vals[(k - 1, j - 1)] = _eval_piece(f, ys, self.grid, i)
            self._Fy.append(vals)
        self._cache = {}
        self._seg_cache = {}

    @classmethod
    def dual(cls, F, nodes=DEFAULT_NODES, breakpoints=None):
        """Problem for F* with parameter entry (-1)**n mu."""
        return cls(star_matrix(F), nodes, breakpoints, lam_sign=(-1) ** F.n)

    # -- layout ---------------------------------------------------------------

    def _col(self, piece, comp):
        N1 = self.N + 1
        start = (piece * self.n + comp) * N1
        return slice(start, start + N1)

    def _ode_rows(self, piece, comp):
        start = (piece * self.n + comp) * self.N
        return slice(start, start + self.N)

    @staticmethod
    def scale_for(lam, n):
        return max(1.0, abs(complex(lam)) ** (1.0 / n))

    def _base(self, k, s):
        key = (k, s)
        if key in self._cache:
            return self._cache[key]
        n, N, npc = self.n, self.N, self.grid.npieces
        A = np.zeros((self.size, self.size), dtype=complex)
        for i in range(npc):
            W = self._W[i]
            for j in range(n):
                r = self._ode_rows(i, j)
                A[r, self._col(i, j)] += self._Dif / s
                if j + 1 < n:
                    A[r, self._col(i, j + 1)] -= W
                for m in range(j + 1):
                    fv = self._Fy[i].get((j, m))
                    if fv is not None:
                        A[r, self._col(i, m)] -= W * (fv * s ** (m - j - 1))[None, :]
        row = npc * n * N
        for i in range(npc - 1):
            for j in range(n):
                A[row, self._col(i, j).stop - 1] = 1.0
                A[row, self._col(i + 1, j).start] = -1.0
                row += 1
        for j in range(k):
            A[row, self._col(0, j).start] = 1.0
            row += 1
        for j in range(n - k):
            A[row, self._col(npc - 1, j).stop - 1] = 1.0
            row += 1
        if len(self._cache) > 8:
            self._cache.clear()
        self._cache[key] = A
        return A

    def _lam_rows_cols(self):
        n = self.n
        return [(self._ode_rows(i, n - 1), self._col(i, 0)) for i in range(self.grid.npieces)]

    def matrix(self, k, lam, s=None):
        """Collocation matrix A_k(lambda) for the problem with k conditions at 0."""
        s = self.scale_for(lam, self.n) if s is None else s
        A = self._base(k, s).copy()
        c = self.lam_sign * complex(lam) * s ** (-self.n)
        for i, (r, cc) in enumerate(self._lam_rows_cols()):
            A[r, cc] -= c * self._W[i]
        return A

    # -- stabilized march -------------------------------------------------------

    def _segments(self, lam):
        """Fine grid whose pieces keep |rho| h below SEG_RHO_H."""
        rho = abs(complex(lam)) ** (1.0 / self.n)
        bp = self.grid.breakpoints
        m = [max(SEG_MIN, int(np.ceil(h * rho / SEG_RHO_H))) for h in np.diff(bp)]
        key = tuple(m)
        fine = self._seg_cache.get(key)
        if fine is None:
            pts = [np.linspace(a, b, mi + 1)[:-1] for a, b, mi in zip(bp[:-1], bp[1:], m)]
            grid = ChebGrid(np.append(np.concatenate(pts), 1.0), SEG_NODES)
            fvals = {kj: grid.sample(f).reshape(grid.npieces, SEG_NODES) for kj, f in self.F.entries.items()}
            fine = (grid, fvals)
            if len(self._seg_cache) > 8:
                self._seg_cache.clear()
            self._seg_cache[key] = fine
        return fine

    def _transfers(self, lams, s, fine):
        """Local fundamental matrices on every fine piece, for each lambda.

        Returns V of shape (len(lams), pieces, n, nodes, n): component, node,
        column, in the scaled variables Z_j = Y_j / s**j, with V = I at the
        left end of each piece.
        """
        grid, fvals = fine
        n, N1 = self.n, SEG_NODES
        N = N1 - 1
        t, D, Q, P, y, Vinv = _reference_matrices(N)
        h = grid.lengths()
        W = Q[1:][None] * (h / 2.0)[:, None, None]
        npc = grid.npieces
        size = n * N1
        base = np.zeros((npc, size, size), dtype=complex)
        dif = np.eye(N1)[1:]
        dif[:, 0] -= 1.0
        for j in range(n):
            r = slice(j * N, (j + 1) * N)
            base[:, r, j * N1:(j + 1) * N1] += dif / s
            if j + 1 < n:
                base[:, r, (j + 1) * N1:(j + 2) * N1] -= W
            for m in range(j + 1):
                fv = fvals.get((j + 1, m + 1))
                if fv is not None:
                    base[:, r, m * N1:(m + 1) * N1] -= W * (fv * s ** (m - j - 1))[:, None, :]
            base[:, n * N + j, j * N1] = 1.0
        rhs = np.zeros((size, n), dtype=complex)
        rhs[n * N + np.arange(n), np.arange(n)] = 1.0
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        A = np.repeat(base[None], len(lams), axis=0)
        r = slice((n - 1) * N, n * N)
        c = self.lam_sign * lams * s ** (-n)
        A[:, :, r, 0:N1] -= c[:, None, None, None] * W[None]
        Z = np.linalg.solve(A, np.broadcast_to(rhs, A.shape[:2] + rhs.shape))
        return Z.reshape(len(lams), npc, n, N1, n)

    def _sweep(self, k, V):
        """Backward QR sweep of the right-end subspace for one lambda.

        Returns the orthonormal bases at the fine breakpoints, the R factors
        and sum log diag R.
        """
        n = self.n
        T = V[:, :, -1, :]
        Tinv = np.linalg.inv(T)
        npc = T.shape[0]
        Qb = np.zeros((n, k), dtype=complex)
        Qb[n - k + np.arange(k), np.arange(k)] = 1.0
        Qs, Rs = [None] * (npc + 1), [None] * npc
        Qs[npc] = Qb
        logr = 0.0j
        for i in range(npc - 1, -1, -1):
            Qb, R = np.linalg.qr(Tinv[i] @ Qb)
            Qs[i], Rs[i] = Qb, R
            logr += np.sum(np.log(np.diag(R)))
        return Qs, Rs, logr

    def log_char(self, k, lams, s=None):
        """log Delta_k(lambda) up to a constant, for an array of lambdas sharing the scale s.

        Delta_k vanishes exactly at the eigenvalues of the problem with k
        conditions at 0 and n - k at 1.
        """
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        s = self.scale_for(lams[0], self.n) if s is None else s
        fine = self._segments(np.max(np.abs(lams)))
        V = self._transfers(lams, s, fine)
        out = np.empty(len(lams), dtype=complex)
        for i in range(len(lams)):
            Qs, _, logr = self._sweep(k, V[i])
            sign, logabs = np.linalg.slogdet(Qs[0][:k, :])
            out[i] = (np.log(sign) if sign != 0 else -np.inf) + logabs + logr
        return out

    def dlogdet(self, k, lam):
        """Delta_k'(lambda) / Delta_k(lambda) by a central difference of step 1e-6 max(1, |lambda|)."""
        lam = complex(lam)
        h = DIFF_STEP * max(1.0, abs(lam))
        with np.errstate(all="ignore"):
            L = self.log_char(k, [lam, lam + h, lam - h])
            rp, rm = np.exp(L[1] - L[0]), np.exp(L[2] - L[0])
        return (rp - rm) / (2 * h)

    def _weyl_march(self, k, lam, check):
        n = self.n
        if not 1 <= k <= n:
            raise RepresentationError(f"Weyl index must lie in 1..{n}")
        s = self.scale_for(lam, n)
        fine = self._segments(lam)
        V = self._transfers([lam], s, fine)[0]
        Qs, Rs, _ = self._sweep(k, V)
        top = Qs[0][:k, :]
        if check:
            # the basis is orthonormal, so top loses rank exactly at eigenvalues
            smin = sla.svdvals(top)[-1]
            cond = 1.0 / smin if smin > 0 else np.inf
            if cond > COND_LIMIT:
                raise ConditioningError(f"lambda={complex(lam):.6g} is (nearly) an eigenvalue", condition=cond)
        e = np.zeros(k, dtype=complex)
        e[k - 1] = s ** (-(k - 1))
        c = np.linalg.solve(top, e)
        return s, fine, V, Qs, Rs, c

    def weyl_initial(self, k, lam, check=True):
        """Quasi-derivatives of the Weyl solution Phi_k at x = 0 (column k of M)."""
        s, _, _, Qs, _, c = self._weyl_march(k, lam, check)
        return (Qs[0] @ c) * s ** np.arange(self.n)

    def weyl(self, k, lam, check=True):
        """Quasi-derivative vector of the Weyl solution Phi_k, shape (n, grid.size).

        Phi_k^[j-1](0) = delta_{jk} for j <= k and Phi_k^[j-1](1) = 0 for
        j <= n - k.  For k = n the solution is the fundamental solution C_n.
        The right-end subspace is swept backwards with re-orthonormalization;
        the forward recovery multiplies by inverse R factors, which contract.
        """
        s, fine, V, Qs, Rs, c = self._weyl_march(k, lam, check)
        grid = fine[0]
        vals = np.empty((self.n, grid.npieces, SEG_NODES), dtype=complex)
        for i in range(grid.npieces):
            z0 = Qs[i] @ c
            vals[:, i, :] = V[i] @ z0
            if i + 1 < grid.npieces:
                c = sla.solve_triangular(Rs[i], c)
        Y = vals.reshape(self.n, -1) * (s ** np.arange(self.n))[:, None]
        return grid.interp(Y, self.grid.x)

    def pencil_eigenvalues(self, k):
        """Finite eigenvalues of the discrete pencil (all zeros of det A_k)."""
        A0 = self._base(k, 1.0)
        E = np.zeros_like(A0)
        for i, (r, cc) in enumerate(self._lam_rows_cols()):
            E[r, cc] = self.lam_sign * self._W[i]
        w = sla.eigvals(A0, E, check_finite=False, homogeneous_eigvals=True)
        alpha, beta = w
        ok = np.abs(beta) > 1e-12 * np.abs(alpha)
        return alpha[ok] / beta[ok]


def _eval_piece(f, x, grid, i):
    from .grid import _eval_on_piece

    return _eval_on_piece(f, x, i, grid)


def weyl_solution(F, k, lam, nodes=DEFAULT_NODES, dual=False, breakpoints=None):
    """Weyl solution Phi_k(x, lambda) (or Phi*_k(x, mu) when ``dual``) as a trajectory.

    Returns ``(grid, Y)`` with ``Y`` of shape (n, grid.size).
    """
    bvp = CollocationBVP.dual(F, nodes, breakpoints) if dual else CollocationBVP(F, nodes, breakpoints)
    return bvp.grid, bvp.weyl(k, lam)
