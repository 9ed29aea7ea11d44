"""Piecewise polynomials on [0, 1].

Every piece is stored as a complex Chebyshev series on its own subinterval.
The Chebyshev basis keeps high-degree pieces (for example recovered
coefficients of degree ~100) well conditioned, while differentiation and
antidifferentiation stay exact polynomial operations.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import Polynomial, Chebyshev

from .errors import RepresentationError

_BREAK_TOL = 1e-14


def _lobatto(deg):
    """Chebyshev-Lobatto points on [-1, 1] in increasing order."""
    if deg == 0:
        return np.zeros(1)
    return -np.cos(np.pi * np.arange(deg + 1) / deg)


def _interp_coeffs(values):
    """Chebyshev coefficients of the interpolant through Lobatto samples."""
    values = np.asarray(values, dtype=complex)
    deg = len(values) - 1
    if deg == 0:
        return values.copy()
    # DCT-I via FFT of the even extension; samples ordered from -1 to 1
    v = values[::-1]
    ext = np.concatenate([v, v[-2:0:-1]])
    coef = np.fft.fft(ext)[: deg + 1] / deg
    coef[0] /= 2
    coef[-1] /= 2
    # the FFT of a real-symmetric extension is real for real data; keep complex
    return coef


class Function1D:
    """Piecewise polynomial function on [0, 1].

    Parameters
    ----------
    breakpoints : sequence of float
        Strictly increasing, starting at 0 and ending at 1.
    coeffs : sequence of array_like
        One Chebyshev coefficient vector per piece, relative to the piece's
        own subinterval.
    """

    __slots__ = ("breakpoints", "coeffs")

    def __init__(self, breakpoints, coeffs):
        bp = np.asarray(breakpoints, dtype=float)
        if bp.ndim != 1 or len(bp) < 2:
            raise RepresentationError("need at least two breakpoints")
        if abs(bp[0]) > _BREAK_TOL or abs(bp[-1] - 1.0) > _BREAK_TOL:
            raise RepresentationError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(bp) <= 0):
            raise RepresentationError("breakpoints must be strictly increasing")
        if len(coeffs) != len(bp) - 1:
            raise RepresentationError(
                f"{len(bp) - 1} pieces expected, got {len(coeffs)}"
            )
        cs = []
        for c in coeffs:
            c = np.atleast_1d(np.asarray(c, dtype=complex))
            if c.ndim != 1 or len(c) == 0 or not np.all(np.isfinite(c)):
                raise RepresentationError("piece coefficients must be finite 1-D")
            cs.append(c)
        bp[0], bp[-1] = 0.0, 1.0
        self.breakpoints = bp
        self.coeffs = tuple(cs)

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, value, breakpoints=(0.0, 1.0)):
        bp = np.asarray(breakpoints, dtype=float)
        return cls(bp, [np.array([value], dtype=complex)] * (len(bp) - 1))

    @classmethod
    def zero(cls, breakpoints=(0.0, 1.0)):
        return cls.constant(0.0, breakpoints)

    @classmethod
    def from_power(cls, breakpoints, power_coeffs):
        """Build from power-basis coefficients in the global variable x.

        ``power_coeffs[i]`` lists a_0, a_1, ... of piece i, meaning
        sum_j a_j x**j on [breakpoints[i], breakpoints[i+1]].
        """
        bp = np.asarray(breakpoints, dtype=float)
        pieces = []
        for a, b, pc in zip(bp[:-1], bp[1:], power_coeffs):
            pc = np.atleast_1d(np.asarray(pc, dtype=complex))
            re = Polynomial(pc.real).convert(kind=Chebyshev, domain=[a, b]).coef
            im = Polynomial(pc.imag).convert(kind=Chebyshev, domain=[a, b]).coef
            m = max(len(re), len(im))
            c = np.zeros(m, dtype=complex)
            c[: len(re)] += re
            c[: len(im)] += 1j * im
            pieces.append(c)
        return cls(bp, pieces)

    @classmethod
    def from_callable(cls, func, breakpoints=(0.0, 1.0), degree=32):
        """Interpolate ``func`` at Chebyshev-Lobatto points of every piece."""
        bp = np.asarray(breakpoints, dtype=float)
        pieces = []
        for a, b in zip(bp[:-1], bp[1:]):
            t = _lobatto(degree)
            x = 0.5 * (a + b) + 0.5 * (b - a) * t
            pieces.append(_interp_coeffs(np.asarray(func(x), dtype=complex)))
        return cls(bp, pieces)

    @classmethod
    def from_samples(cls, breakpoints, samples):
        """Interpolate values given at each piece's Lobatto nodes."""
        return cls(breakpoints, [_interp_coeffs(s) for s in samples])

    # -- evaluation ---------------------------------------------------------

    @property
    def npieces(self):
        return len(self.coeffs)

    @property
    def degree(self):
        return max(len(c) for c in self.coeffs) - 1

    def piece_index(self, x):
        """Index of the piece used at x (right piece at breakpoints, left at 1)."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        return np.clip(idx, 0, self.npieces - 1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xs = np.atleast_1d(x)
        if np.any(xs < -_BREAK_TOL) or np.any(xs > 1 + _BREAK_TOL):
            raise RepresentationError("evaluation point outside [0, 1]")
        out = np.empty(xs.shape, dtype=complex)
        idx = self.piece_index(xs)
        for i in np.unique(idx):
            a, b = self.breakpoints[i], self.breakpoints[i + 1]
            sel = idx == i
            t = (2.0 * xs[sel] - a - b) / (b - a)
            out[sel] = C.chebval(t, self.coeffs[i])
        return out[0] if scalar else out

    # -- calculus -----------------------------------------------------------

    def deriv(self, m=1):
        """Piecewise m-th derivative (one-sided at breakpoints)."""
        if m == 0:
            return self
        pieces = []
        for (a, b), c in zip(self._intervals(), self.coeffs):
            d = C.chebder(c, m, scl=2.0 / (b - a)) if len(c) > m else np.zeros(1)
            pieces.append(np.asarray(d, dtype=complex))
        return Function1D(self.breakpoints, pieces)

    def antiderivative(self, value_at_zero=0.0):
        """Continuous antiderivative F with F(0) = value_at_zero."""
        pieces = []
        offset = complex(value_at_zero)
        for (a, b), c in zip(self._intervals(), self.coeffs):
            ic = C.chebint(c, m=1, lbnd=-1, k=0, scl=(b - a) / 2.0)
            ic = np.asarray(ic, dtype=complex)
            ic[0] += offset
            offset = C.chebval(1.0, ic)
            pieces.append(ic)
        return Function1D(self.breakpoints, pieces)

    def integral(self):
        """Definite integral over [0, 1]."""
        return complex(self.antiderivative()(1.0))

    def mean(self):
        return self.integral()

    # -- arithmetic ---------------------------------------------------------

    def _intervals(self):
        bp = self.breakpoints
        return list(zip(bp[:-1], bp[1:]))

    def refine(self, breakpoints):
        """Same function represented on a finer breakpoint set."""
        new_bp = np.asarray(breakpoints, dtype=float)
        if len(new_bp) == len(self.breakpoints) and np.allclose(
            new_bp, self.breakpoints, rtol=0, atol=_BREAK_TOL
        ):
            return self
        old = self.breakpoints
        for b in old:
            if np.min(np.abs(new_bp - b)) > _BREAK_TOL:
                raise RepresentationError("refinement must contain old breakpoints")
        pieces = []
        for a, b in zip(new_bp[:-1], new_bp[1:]):
            i = int(np.clip(np.searchsorted(old, 0.5 * (a + b)) - 1, 0, self.npieces - 1))
            c = self.coeffs[i]
            oa, ob = old[i], old[i + 1]
            if abs(a - oa) < _BREAK_TOL and abs(b - ob) < _BREAK_TOL:
                pieces.append(c)
                continue
            deg = len(c) - 1
            x = 0.5 * (a + b) + 0.5 * (b - a) * _lobatto(deg)
            t = (2.0 * x - oa - ob) / (ob - oa)
            pieces.append(_interp_coeffs(C.chebval(t, c)))
        return Function1D(new_bp, pieces)

    @staticmethod
    def _common(f, g):
        bp = np.union1d(f.breakpoints, g.breakpoints)
        keep = np.concatenate([[True], np.diff(bp) > _BREAK_TOL])
        bp = bp[keep]
        bp[-1] = 1.0
        return f.refine(bp), g.refine(bp)

    def _binary(self, other, op):
        if isinstance(other, Function1D):
            f, g = Function1D._common(self, other)
            return Function1D(f.breakpoints, [op(a, b) for a, b in zip(f.coeffs, g.coeffs)])
        val = complex(other)
        return Function1D(
            self.breakpoints, [op(a, np.array([val])) for a in self.coeffs]
        )

    def __add__(self, other):
        return self._binary(other, C.chebadd)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, C.chebsub)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Function1D(self.breakpoints, [-c for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, Function1D):
            return self._binary(other, C.chebmul)
        val = complex(other)
        return Function1D(self.breakpoints, [val * c for c in self.coeffs])

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1.0 / complex(other))

    def conj(self):
        return Function1D(self.breakpoints, [np.conj(c) for c in self.coeffs])

    def trim(self, tol=0.0):
        """Drop trailing coefficients whose magnitude is at most tol."""
        pieces = []
        for c in self.coeffs:
            nz = np.nonzero(np.abs(c) > tol)[0]
            pieces.append(c[: nz[-1] + 1] if len(nz) else c[:1] * 0)
        return Function1D(self.breakpoints, pieces)

    def sup_norm(self, samples=257):
        x = np.linspace(0.0, 1.0, samples)
        return float(np.max(np.abs(self(x))))

    def is_zero(self):
        return all(not np.any(c) for c in self.coeffs)

    def __repr__(self):
        return (
            f"Function1D(pieces={self.npieces}, degree={self.degree}, "
            f"breakpoints={self.breakpoints.tolist()})"
        )
