"""Coefficient sets of the differential expression and their transforms.

A :class:`CoefficientSet` holds tau_0, ..., tau_{n-2}.  tau_0 lives in
W_2^{-1} and is always carried through its antiderivative; the remaining
coefficients are stored directly as piecewise polynomials.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from math import comb, ceil

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import RepresentationError, UnsupportedOrderError
from .functions import Function1D

REAL_TOL = 1e-10


@dataclass(frozen=True)
class Antiderivative:
    """A (possibly distributional) function given through its antiderivative."""

    func: Function1D

    def is_regular(self, tol=1e-12):
        """True when the antiderivative is continuous, so the derivative is a function."""
        return _has_continuous_derivatives(self.func, 1, tol)

    def derivative(self):
        if not self.is_regular():
            raise RepresentationError("antiderivative has jumps; derivative is a distribution")
        return self.func.deriv()


def _sample_x(k=64):
    return np.linspace(0.0, 1.0, k)


def _has_continuous_derivatives(f, order, tol=1e-9):
    """Check f^{(j)} is continuous across breakpoints for j < order."""
    g = f
    for _ in range(order):
        for i in range(1, g.npieces):
            lv = C.chebval(1.0, g.coeffs[i - 1])
            rv = C.chebval(-1.0, g.coeffs[i])
            if abs(lv - rv) > tol * max(1.0, abs(lv)):
                return False
        g = g.deriv()
    return True


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients tau_nu, nu = 0..n-2, of the expression ell_n.

    ``tau[0]`` is an :class:`Antiderivative`; ``tau[nu]`` for nu >= 1 is a
    :class:`Function1D`.
    """

    n: int
    tau: tuple
    selfadjoint: bool = field(default=None)

    def __post_init__(self):
        n = self.n
        if int(n) != n or n < 2:
            raise UnsupportedOrderError(f"order n must be an integer >= 2, got {n}")
        tau = tuple(self.tau)
        if len(tau) != n - 1:
            raise RepresentationError(f"expected {n - 1} coefficients, got {len(tau)}")
        if not isinstance(tau[0], Antiderivative):
            raise RepresentationError("tau_0 must be stored as an Antiderivative")
        for nu in range(1, n - 1):
            if not isinstance(tau[nu], Function1D):
                raise RepresentationError(f"tau_{nu} must be a Function1D")
            if nu >= 2 and not _has_continuous_derivatives(tau[nu], nu - 1):
                raise RepresentationError(
                    f"tau_{nu} must lie in W_2^{nu - 1}: derivatives below order {nu - 1} must be continuous"
                )
        object.__setattr__(self, "tau", tau)
        measured = self.check_selfadjoint()
        if self.selfadjoint is None:
            object.__setattr__(self, "selfadjoint", measured)
        elif self.selfadjoint and not measured:
            raise RepresentationError("selfadjoint flag set but i^(n+nu) tau_nu is not real")

    @classmethod
    def zero(cls, n):
        tau = [Antiderivative(Function1D.zero())] + [Function1D.zero() for _ in range(n - 2)]
        return cls(n, tuple(tau))

    @classmethod
    def from_functions(cls, n, tau0_antiderivative=None, **taus):
        """Convenience builder: ``from_functions(4, tau2=f, tau1=g)``."""
        t0 = tau0_antiderivative if tau0_antiderivative is not None else Function1D.zero()
        tau = [Antiderivative(t0)]
        for nu in range(1, n - 1):
            tau.append(taus.pop(f"tau{nu}", None) or Function1D.zero())
        if taus:
            raise RepresentationError(f"unknown coefficients {sorted(taus)}")
        return cls(n, tuple(tau))

    @property
    def antiderivative0(self):
        return self.tau[0].func

    def breakpoints(self):
        bp = np.array([0.0, 1.0])
        for t in self.tau:
            f = t.func if isinstance(t, Antiderivative) else t
            bp = np.union1d(bp, f.breakpoints)
        return bp

    def check_selfadjoint(self, tol=REAL_TOL):
        x = _sample_x()
        for nu, t in enumerate(self.tau):
            f = t.func if isinstance(t, Antiderivative) else t
            v = (1j ** (self.n + nu)) * f(x)
            scale = max(1.0, float(np.max(np.abs(v))))
            if np.max(np.abs(v.imag)) > tol * scale:
                return False
        return True

    def smoothness_tags(self):
        return tuple(f"W2^{nu - 1}" for nu in range(self.n - 1))

    def scaled(self, alpha):
        tau = [Antiderivative(alpha * self.tau[0].func)] + [alpha * t for t in self.tau[1:]]
        return CoefficientSet(self.n, tuple(tau))

    def __add__(self, other):
        if other.n != self.n:
            raise RepresentationError("orders differ")
        tau = [Antiderivative(self.tau[0].func + other.tau[0].func)]
        tau += [a + b for a, b in zip(self.tau[1:], other.tau[1:])]
        return CoefficientSet(self.n, tuple(tau))


@dataclass(frozen=True)
class SigmaSet:
    """Regularization functions sigma_nu with singularity orders i_0 = 1, i_nu = 0."""

    n: int
    sigma: tuple

    @property
    def singularity_orders(self):
        return (1,) + (0,) * (self.n - 2)


def sigma_sign(nu):
    """(-1)^(floor(nu/2) + nu), the sign relating sigma_nu and tau_nu for nu >= 1."""
    return -1 if (nu // 2 + nu) % 2 else 1


def make_sigma(coeffs: CoefficientSet) -> SigmaSet:
    """sigma_0 = -tau_0^{(-1)} and sigma_nu = (-1)^(floor(nu/2)+nu) tau_nu."""
    if not isinstance(coeffs, CoefficientSet):
        raise RepresentationError("make_sigma expects a CoefficientSet")
    sig = [-coeffs.tau[0].func]
    for nu in range(1, coeffs.n - 1):
        sig.append(sigma_sign(nu) * coeffs.tau[nu])
    return SigmaSet(coeffs.n, tuple(sig))


def sigma_to_tau(sigma: SigmaSet) -> CoefficientSet:
    """Invert :func:`make_sigma`."""
    tau = [Antiderivative(-sigma.sigma[0])]
    for nu in range(1, sigma.n - 1):
        tau.append(sigma_sign(nu) * sigma.sigma[nu])
    return CoefficientSet(sigma.n, tuple(tau))


def tau_to_p(coeffs: CoefficientSet):
    """Coefficients p_s of y^(n) + sum p_s y^(s) equivalent to ell_n.

    Returns a list indexed by s = 0..n-2.  Entry 0 is an
    :class:`Antiderivative` (the antiderivative of p_0 vanishing at 0),
    because p_0 contains tau_0 itself; entries s >= 1 are Function1D.
    """
    n = coeffs.n

    def tau(nu):
        if nu > n - 2:
            return None
        return coeffs.tau[nu]

    def d(nu, m):
        """m-th derivative of tau_nu (m >= 0) as Function1D; tau_0 handled apart."""
        t = tau(nu)
        if t is None:
            return None
        if nu == 0:
            raise AssertionError("tau_0 handled separately")
        return t.deriv(m)

    p = []
    for s in range(n - 1):
        acc = Function1D.zero()
        p0_extra = None
        for k in range(ceil(s / 2), min(s, n // 2 - 1) + 1):
            c = comb(k, s - k)
            if 2 * k == 0 and s == 0:
                p0_extra = c  # tau_0 contribution
            elif tau(2 * k) is not None:
                acc = acc + c * d(2 * k, 2 * k - s)
            t = d(2 * k + 1, 2 * k - s + 1) if tau(2 * k + 1) is not None else None
            if t is not None:
                acc = acc + c * t
        for k in range(ceil((s - 1) / 2), min(s, (n - 1) // 2) - 1 + 1):
            c = 2 * comb(k, s - k - 1)
            t = d(2 * k + 1, 2 * k + 1 - s) if tau(2 * k + 1) is not None else None
            if t is not None:
                acc = acc + c * t
        if s == 0:
            anti = acc.antiderivative()
            if p0_extra:
                anti = anti + p0_extra * (coeffs.tau[0].func - coeffs.tau[0].func(0.0))
            p.append(Antiderivative(anti))
        else:
            p.append(acc)
    return p


@dataclass
class AsymptoticParameters:
    """Constants of the eigenvalue/weight asymptotics for n = 2, 3, 4."""

    n: int
    chi: tuple = ()
    theta: complex = None
    t0: float = None
    t1: float = None
    sigma_int: complex = None
    residuals: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(not np.isfinite(c) for c in self.chi):
            raise RepresentationError("chi values must be finite")


def build_model_problem(params: AsymptoticParameters, n=None) -> CoefficientSet:
    """Model coefficients sharing the leading asymptotic constants of ``params``."""
    n = params.n if n is None else n
    if n == 2:
        return CoefficientSet.zero(2)
    if n == 3:
        theta = params.theta if params.theta is not None else params.sigma_int
        if theta is None:
            raise RepresentationError("n=3 model needs theta")
        return CoefficientSet.from_functions(3, tau1=Function1D.constant(theta))
    if n == 4:
        if None in (params.theta, params.t0, params.t1):
            raise RepresentationError("n=4 model needs theta, t0, t1")
        th, t0, t1 = params.theta, params.t0, params.t1
        sg = params.sigma_int or 0.0
        quad = Function1D.from_power(
            [0, 1], [[t0, -4 * t0 - 2 * t1 + 6 * th, 3 * t0 + 3 * t1 - 6 * th]]
        )
        return CoefficientSet.from_functions(4, tau1=Function1D.constant(sg), tau2=quad)
    raise UnsupportedOrderError(f"model problems are built for n in (2, 3, 4), not {n}")


def random_selfadjoint(n, rng, degree=2, scale=1.0):
    """Random polynomial coefficients with i^(n+nu) tau_nu real.

    ``rng`` is a numpy Generator.  Coefficients of tau_nu are drawn uniformly
    from [-scale, scale]; tau_0 is given through its antiderivative, which
    vanishes at 0.
    """
    tau = []
    for nu in range(n - 1):
        c = rng.uniform(-scale, scale, degree + 1) / (1j ** (n + nu))
        if nu == 0:
            c[0] = 0.0
            tau.append(Antiderivative(Function1D.from_power([0.0, 1.0], [c])))
        else:
            tau.append(Function1D.from_power([0.0, 1.0], [c]))
    return CoefficientSet(n, tuple(tau))


# -- coefficient files -------------------------------------------------------


def format_complex(z):
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}j"


def parse_complex(tok):
    try:
        return complex(tok.replace("i", "j"))
    except ValueError as exc:
        raise RepresentationError(f"cannot parse number {tok!r}") from exc


def _write_function(cp, name, f, extra=None):
    cp[name] = {}
    sec = cp[name]
    if extra:
        sec.update(extra)
    sec["basis"] = "chebyshev"
    sec["breakpoints"] = " ".join(f"{b:.17g}" for b in f.breakpoints)
    for i, c in enumerate(f.coeffs):
        sec[f"piece{i}"] = " ".join(format_complex(v) for v in c)


def _read_function(sec, name):
    try:
        bp = [float(t) for t in sec["breakpoints"].split()]
    except KeyError as exc:
        raise RepresentationError(f"[{name}] lacks breakpoints") from exc
    except ValueError as exc:
        raise RepresentationError(f"[{name}] has malformed breakpoints") from exc
    pieces = []
    for i in range(len(bp) - 1):
        key = f"piece{i}"
        if key not in sec:
            raise RepresentationError(f"[{name}] lacks {key}")
        pieces.append([parse_complex(t) for t in sec[key].split()])
    basis = sec.get("basis", "power").strip().lower()
    if basis == "power":
        return Function1D.from_power(bp, pieces)
    if basis == "chebyshev":
        return Function1D(bp, pieces)
    raise RepresentationError(f"[{name}] unknown basis {basis!r}")


def dumps_coefficients(coeffs: CoefficientSet) -> str:
    cp = configparser.ConfigParser()
    cp["problem"] = {"n": str(coeffs.n)}
    _write_function(cp, "tau0", coeffs.tau[0].func, {"antiderivative": "true"})
    for nu in range(1, coeffs.n - 1):
        _write_function(cp, f"tau{nu}", coeffs.tau[nu])
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def loads_coefficients(text: str) -> CoefficientSet:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
        n = int(cp["problem"]["n"])
    except (configparser.Error, KeyError, ValueError) as exc:
        raise RepresentationError(f"malformed coefficient file: {exc}") from exc
    if n < 2:
        raise UnsupportedOrderError(f"order n must be >= 2, got {n}")
    known = {"problem"} | {f"tau{nu}" for nu in range(n - 1)}
    extra = set(cp.sections()) - known
    if extra:
        raise RepresentationError(f"unexpected sections {sorted(extra)}")
    tau = []
    for nu in range(n - 1):
        name = f"tau{nu}"
        f = _read_function(cp[name], name) if name in cp else Function1D.zero()
        if nu == 0:
            flag = cp[name].get("antiderivative", "true").strip().lower() if name in cp else "true"
            if flag not in ("true", "false"):
                raise RepresentationError("antiderivative flag must be true or false")
            if flag == "false":
                f = f.antiderivative()
            tau.append(Antiderivative(f))
        else:
            tau.append(f)
    return CoefficientSet(n, tuple(tau))


def save_coefficients(path, coeffs):
    with open(path, "w") as fh:
        fh.write(dumps_coefficients(coeffs))


def load_coefficients(path):
    with open(path) as fh:
        return loads_coefficients(fh.read())
