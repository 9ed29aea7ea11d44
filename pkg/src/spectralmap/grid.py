"""Composite Chebyshev-Lobatto grids on [0, 1].

One Lobatto grid of ``nodes`` points is laid on every subinterval between
breakpoints.  Interface points appear twice (once per adjacent piece); all
matrices act on this concatenated layout.  Cumulative integrals use
Clenshaw-Curtis weights per piece, chained across interfaces.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import RepresentationError
from .functions import _lobatto, _interp_coeffs


@lru_cache(maxsize=32)
def _reference_matrices(deg):
    """Differentiation, cumulative-integration and resampling on [-1, 1]."""
    t = _lobatto(deg)
    n1 = deg + 1
    # Chebyshev-Vandermonde at Lobatto nodes, values -> coefficients via DCT
    V = C.chebvander(t, deg)
    Vinv = np.empty((n1, n1))
    for j in range(n1):
        e = np.zeros(n1)
        e[j] = 1.0
        Vinv[:, j] = _interp_coeffs(e).real
    # differentiation
    Dc = np.zeros((n1, n1))
    for j in range(n1):
        e = np.zeros(n1)
        e[j] = 1.0
        d = C.chebder(e)
        Dc[: len(d), j] = d
    D = V @ Dc @ Vinv
    # cumulative integral from -1
    Ic = np.zeros((n1 + 1, n1))
    for j in range(n1):
        e = np.zeros(n1)
        e[j] = 1.0
        ic = C.chebint(e, lbnd=-1)
        Ic[: len(ic), j] = ic
    Q = C.chebvander(t, deg + 1) @ Ic @ Vinv
    # first-kind points (interior) for rectangular collocation
    y = -np.cos(np.pi * (2 * np.arange(deg) + 1) / (2 * deg))
    P = C.chebvander(y, deg) @ Vinv
    for M in (D, Q, P, Vinv):
        M.setflags(write=False)
    return t, D, Q, P, y, Vinv


class ChebGrid:
    """Composite Chebyshev-Lobatto grid.

    Parameters
    ----------
    breakpoints : sequence of float
        Piece boundaries, from 0 to 1.
    nodes : int
        Lobatto nodes per piece (degree + 1); must be 2**m + 1 with nodes >= 33
        when validated through :meth:`validate_size`.
    """

    def __init__(self, breakpoints=(0.0, 1.0), nodes=129):
        bp = np.asarray(breakpoints, dtype=float)
        if abs(bp[0]) > 1e-14 or abs(bp[-1] - 1) > 1e-14 or np.any(np.diff(bp) <= 0):
            raise RepresentationError("grid breakpoints must increase from 0 to 1")
        if nodes < 3:
            raise RepresentationError("need at least three nodes per piece")
        self.breakpoints = bp
        self.nodes = int(nodes)
        self.deg = self.nodes - 1
        t, D, Q, P, y, Vinv = _reference_matrices(self.deg)
        self._t, self._D, self._Q, self._P, self._y = t, D, Q, P, y
        self._Vinv = Vinv
        xs, ys = [], []
        for a, b in zip(bp[:-1], bp[1:]):
            xs.append(0.5 * (a + b) + 0.5 * (b - a) * t)
            ys.append(0.5 * (a + b) + 0.5 * (b - a) * y)
        self.piece_nodes = xs
        self.piece_collocation = ys
        self.x = np.concatenate(xs)
        self.x[0], self.x[-1] = 0.0, 1.0

    @staticmethod
    def validate_size(nodes):
        m = nodes - 1
        return nodes >= 33 and m & (m - 1) == 0

    @property
    def npieces(self):
        return len(self.breakpoints) - 1

    @property
    def size(self):
        return self.npieces * self.nodes

    def lengths(self):
        return np.diff(self.breakpoints)

    def piece_slice(self, i):
        return slice(i * self.nodes, (i + 1) * self.nodes)

    def unique_mask(self):
        """Mask that drops the duplicated left node of every piece after the first."""
        mask = np.ones(self.size, dtype=bool)
        for i in range(1, self.npieces):
            mask[i * self.nodes] = False
        return mask

    # -- operators on the concatenated layout --------------------------------

    def diff(self, f, axis=-1):
        f = np.moveaxis(np.asarray(f), axis, -1)
        out = np.empty(f.shape, dtype=np.result_type(f, float))
        for i, h in enumerate(self.lengths()):
            s = self.piece_slice(i)
            out[..., s] = f[..., s] @ self._D.T * (2.0 / h)
        return np.moveaxis(out, -1, axis)

    def cumint(self, f, axis=-1):
        """Integral from 0 to every node, along ``axis``."""
        f = np.moveaxis(np.asarray(f), axis, -1)
        out = np.empty(f.shape, dtype=np.result_type(f, float))
        offset = 0.0
        for i, h in enumerate(self.lengths()):
            s = self.piece_slice(i)
            part = f[..., s] @ self._Q.T * (h / 2.0)
            out[..., s] = part + offset
            offset = out[..., s][..., -1:]
        return np.moveaxis(out, -1, axis)

    def integrate(self, f, axis=-1):
        return np.take(self.cumint(f, axis=axis), -1, axis=axis)

    def weights(self):
        """Clenshaw-Curtis weights for the full-interval integral."""
        w = np.zeros(self.size)
        row = self._Q[-1]
        for i, h in enumerate(self.lengths()):
            w[self.piece_slice(i)] = row * (h / 2.0)
        return w

    def interp(self, f, xq, axis=-1):
        """Evaluate the piecewise interpolant of grid data at points xq."""
        f = np.moveaxis(np.asarray(f), axis, -1)
        xq = np.atleast_1d(np.asarray(xq, dtype=float))
        idx = np.clip(np.searchsorted(self.breakpoints, xq, side="right") - 1, 0, self.npieces - 1)
        out = np.empty(f.shape[:-1] + xq.shape, dtype=np.result_type(f, float))
        for i in np.unique(idx):
            a, b = self.breakpoints[i], self.breakpoints[i + 1]
            sel = idx == i
            coef = f[..., self.piece_slice(i)] @ self._Vinv.T
            t = (2 * xq[sel] - a - b) / (b - a)
            out[..., sel] = coef @ C.chebvander(t, self.deg).T
        return np.moveaxis(out, -1, axis)

    def to_function(self, values):
        """Function1D interpolating 1-D grid data piecewise."""
        from .functions import Function1D

        values = np.asarray(values)
        return Function1D.from_samples(
            self.breakpoints, [values[self.piece_slice(i)] for i in range(self.npieces)]
        )

    def sample(self, func):
        """Evaluate a Function1D on the grid, honouring piece ownership."""
        out = np.empty(self.size, dtype=complex)
        for i in range(self.npieces):
            x = self.piece_nodes[i]
            out[self.piece_slice(i)] = _eval_on_piece(func, x, i, self)
        return out

    def __repr__(self):
        return f"ChebGrid(pieces={self.npieces}, nodes={self.nodes})"


def _eval_on_piece(func, x, i, grid):
    """Evaluate ``func`` at points of grid piece i using one-sided limits."""
    a, b = grid.breakpoints[i], grid.breakpoints[i + 1]
    # nudge endpoints inward so a function with a breakpoint at a or b is
    # evaluated with the piece that owns this grid piece
    mid = 0.5 * (a + b)
    pidx = func.piece_index(np.array([mid]))[0]
    fa, fb = func.breakpoints[pidx], func.breakpoints[pidx + 1]
    if a < fa - 1e-14 or b > fb + 1e-14:
        raise RepresentationError("grid breakpoints must include the function's breakpoints")
    t = (2.0 * x - fa - fb) / (fb - fa)
    return C.chebval(t, func.coeffs[pidx])
