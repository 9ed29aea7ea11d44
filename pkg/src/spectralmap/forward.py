"""Spectral data of the problems L_k: eigenvalues, Weyl matrices, weight numbers.

Eigenvalues of L_k are the zeros of the determinant of the collocation
matrix for the Weyl solution Phi_k.  Candidates from a small discrete pencil
and from the asymptotic tracks are refined by Newton's method on
log det, and the total count inside a disk is certified by the argument
principle.  Weight numbers are residues of M_{k+1,k}, taken by trapezoid
quadrature on circles.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import LinAlgWarning
from scipy.optimize import linear_sum_assignment

from .assoc import AssociatedMatrix, zero_matrix
from .coefficients import AsymptoticParameters
from .errors import (
    ConditioningError,
    DegenerateWeightError,
    ExtrapolationError,
    FitError,
    IndexMismatchError,
    MultiplicityError,
    RadiusError,
    RepresentationError,
    StructuralError,
    WindingError,
)
from .ode import DEFAULT_NODES, CollocationBVP, fundamental_matrix

log = logging.getLogger(__name__)

RESIDUE_NODES = 64
RADIUS_FACTOR = 0.25
RHO_CAP = 60.0


# -- containers -----------------------------------------------------------------


@dataclass
class SpectralData:
    """Eigenvalues lambda_{l,k} and weight numbers beta_{l,k}.

    Entries are kept sorted by k, then l.
    """

    n: int
    l: np.ndarray
    k: np.ndarray
    lam: np.ndarray
    beta: np.ndarray
    provenance: str = "computed"

    def __post_init__(self):
        self.l = np.asarray(self.l, dtype=int)
        self.k = np.asarray(self.k, dtype=int)
        self.lam = np.asarray(self.lam, dtype=complex)
        self.beta = np.asarray(self.beta, dtype=complex)
        if not (len(self.l) == len(self.k) == len(self.lam) == len(self.beta)):
            raise RepresentationError("spectral data columns differ in length")
        if np.any(self.k < 1) or np.any(self.k > self.n - 1) or np.any(self.l < 1):
            raise RepresentationError("indices out of range")
        order = np.lexsort((self.l, self.k))
        for name in ("l", "k", "lam", "beta"):
            setattr(self, name, getattr(self, name)[order])
        pairs = set(zip(self.l.tolist(), self.k.tolist()))
        if len(pairs) != len(self.l):
            raise RepresentationError("duplicate (l, k) entries")

    @classmethod
    def from_tables(cls, n, lam, beta, provenance="computed"):
        """Build from arrays of shape (L, n-1) indexed [l-1, k-1]."""
        lam = np.asarray(lam, dtype=complex)
        beta = np.asarray(beta, dtype=complex)
        L = lam.shape[0]
        ll, kk = np.meshgrid(np.arange(1, L + 1), np.arange(1, n), indexing="ij")
        return cls(n, ll.ravel(), kk.ravel(), lam.ravel(), beta.ravel(), provenance)

    @classmethod
    def from_unordered(cls, n, per_k, provenance="computed"):
        """Index unordered (lambda, beta) lists per k along the asymptotic tracks."""
        chi = chi_constants(n)
        ls, ks, lams, betas = [], [], [], []
        for k, (lam, beta) in per_k.items():
            lam = np.asarray(lam, dtype=complex)
            labels = track_labels(lam, n, k, chi[k - 1])
            ls += list(labels)
            ks += [k] * len(lam)
            lams += list(lam)
            betas += list(np.asarray(beta, dtype=complex))
        return cls(n, ls, ks, lams, betas, provenance)

    @property
    def count(self):
        counts = {k: int(np.sum(self.k == k)) for k in range(1, self.n)}
        return min(counts.values()) if counts else 0

    def is_rectangular(self):
        L = self.count
        return len(self.l) == L * (self.n - 1) and all(
            np.array_equal(np.sort(self.l[self.k == k]), np.arange(1, L + 1)) for k in range(1, self.n)
        )

    def tables(self):
        """Arrays (lam, beta) of shape (L, n-1)."""
        if not self.is_rectangular():
            raise IndexMismatchError("spectral data is not a full l x k table")
        L = self.count
        lam = np.empty((L, self.n - 1), dtype=complex)
        beta = np.empty_like(lam)
        lam[self.l - 1, self.k - 1] = self.lam
        beta[self.l - 1, self.k - 1] = self.beta
        return lam, beta

    def truncated(self, L):
        keep = self.l <= L
        return SpectralData(self.n, self.l[keep], self.k[keep], self.lam[keep], self.beta[keep], self.provenance)

    def replace(self, l, k, lam=None, beta=None):
        """Copy with the entry (l, k) changed."""
        i = np.nonzero((self.l == l) & (self.k == k))[0]
        if len(i) != 1:
            raise IndexMismatchError(f"no entry ({l}, {k})")
        new_lam, new_beta = self.lam.copy(), self.beta.copy()
        if lam is not None:
            new_lam[i[0]] = lam
        if beta is not None:
            new_beta[i[0]] = beta
        return SpectralData(self.n, self.l, self.k, new_lam, new_beta, self.provenance)

    def dumps(self):
        lines = [f"# n={self.n} count={self.count}"]
        for l, k, lam, beta in zip(self.l, self.k, self.lam, self.beta):
            lines.append(
                f"{l} {k} {lam.real:.17g} {lam.imag:.17g} {beta.real:.17g} {beta.imag:.17g}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise RepresentationError("spectral data file lacks the '# n=.. count=..' header")
        head = dict(tok.split("=", 1) for tok in lines[0][1:].split() if "=" in tok)
        try:
            n = int(head["n"])
            count = int(head["count"])
        except (KeyError, ValueError) as exc:
            raise RepresentationError(f"bad header {lines[0]!r}") from exc
        rows = []
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 6:
                raise RepresentationError(f"bad record {ln!r}")
            try:
                rows.append((int(parts[0]), int(parts[1]), *map(float, parts[2:])))
            except ValueError as exc:
                raise RepresentationError(f"bad record {ln!r}") from exc
        if not rows:
            raise RepresentationError("spectral data file has no records")
        a = np.array(rows, dtype=float)
        # assemble component-wise so signed zeros survive
        lam = np.empty(len(a), dtype=complex)
        beta = np.empty(len(a), dtype=complex)
        lam.real, lam.imag, beta.real, beta.imag = a[:, 2], a[:, 3], a[:, 4], a[:, 5]
        data = cls(n, a[:, 0], a[:, 1], lam, beta, "loaded")
        if data.count != count:
            raise RepresentationError(f"header count {count} disagrees with {data.count} records")
        return data

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.loads(fh.read())


@dataclass
class WeylMatrixSample:
    lam: complex
    M: np.ndarray


@dataclass
class WeightMatrix:
    lambda0: complex
    N: np.ndarray
    radius: float = None
    columns: tuple = ()


# -- asymptotic tracks ----------------------------------------------------------


def main_term(n, k, l, chi):
    """(-1)^(n-k) (pi / sin(pi k / n))^n (l + chi)^n."""
    c = np.pi / np.sin(np.pi * k / n)
    return (-1) ** (n - k) * (c * (np.asarray(l) + chi)) ** n


def track_coordinate(lam, n, k):
    """(1/pi) sin(pi k / n) ((-1)^(n-k) lambda)^(1/n), principal root; close to l + chi."""
    lam = np.asarray(lam, dtype=complex)
    return np.sin(np.pi * k / n) / np.pi * ((-1) ** (n - k) * lam) ** (1.0 / n)


def track_labels(lam, n, k, chi):
    """Labels l = 1..len(lam) matching each eigenvalue to its asymptotic track."""
    lam = np.asarray(lam, dtype=complex)
    m = len(lam)
    t = track_coordinate(lam, n, k) - chi
    targets = np.arange(1, m + 1)
    cost = np.abs(t[:, None] - targets[None, :])
    # ties go to the smaller |lambda|
    cost = cost + 1e-9 * (np.abs(lam) / (1 + np.abs(lam).max()))[:, None] * targets[None, :]
    rows, cols = linear_sum_assignment(cost)
    labels = np.empty(m, dtype=int)
    labels[rows] = targets[cols]
    return labels


def track_cap(n, k, rho_cap=RHO_CAP):
    """Largest l whose main-term |rho| stays below the cap."""
    return max(1, int(rho_cap * np.sin(np.pi * k / n) / np.pi))


# -- root finding ---------------------------------------------------------------


def _quiet():
    ctx = warnings.catch_warnings()
    ctx.__enter__()
    warnings.simplefilter("ignore", LinAlgWarning)
    warnings.simplefilter("ignore", RuntimeWarning)
    return ctx


def _newton(bvp, k, lam, maxit=40, tol=1e-13, bound=np.inf):
    lam = complex(lam)
    prev = np.inf
    ctx = _quiet()
    try:
        for _ in range(maxit):
            d = bvp.dlogdet(k, lam)
            if not np.isfinite(d):
                return lam, True
            step = 1.0 / d
            lam = lam - step
            size = abs(step) / max(1.0, abs(lam))
            if size <= tol or (size < 1e-10 and abs(step) >= 0.5 * prev):
                return lam, True
            prev = abs(step)
            if abs(lam) > bound:
                return lam, False
        return lam, False
    finally:
        ctx.__exit__(None, None, None)


def winding_number(bvp, k, center, radius, nodes=16):
    """(1 / 2 pi i) times the contour integral of d log det / d lambda on a circle."""
    theta = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
    z = np.exp(1j * theta)
    ctx = _quiet()
    try:
        vals = np.array([bvp.dlogdet(k, center + radius * e) for e in z])
    finally:
        ctx.__exit__(None, None, None)
    return complex(radius * np.mean(vals * z))


def count_zeros(bvp, k, radius, center=0.0, start=64, max_nodes=1024):
    """Number of zeros of det A_k inside a circle; nodes double until it settles."""
    prev = None
    m = start
    while m <= max_nodes:
        w = winding_number(bvp, k, center, radius, m)
        r = round(w.real)
        if abs(w - r) < 0.05:
            if prev == r:
                return int(r)
            prev = r
        m *= 2
    raise WindingError(f"winding count did not settle on radius {radius:.6g}", expected=None, counted=w)


def _dedupe(roots, rel=1e-8):
    out = []
    for z in sorted(roots, key=abs):
        if all(abs(z - w) > rel * max(1.0, abs(z)) for w in out):
            out.append(z)
    return out


def _roots_in_disk(bvp, k, radius, seeds):
    found = []
    for s in seeds:
        z, ok = _newton(bvp, k, s, bound=2 * radius)
        if ok and abs(z) < radius:
            found.append(z)
    return _dedupe(found)


def find_eigenvalues(F: AssociatedMatrix, k, count, nodes=DEFAULT_NODES, chi=None, bvp=None, extra=0):
    """First ``count`` eigenvalues of L_k, ordered by their track index l.

    All zeros inside a disk reaching halfway to track index count + 1/2 are
    located and certified by an argument-principle count; the zeros are then
    matched to the tracks l = 1, 2, ...
    """
    n = F.n
    if not 1 <= k <= n - 1:
        raise RepresentationError(f"problem index k must lie in 1..{n - 1}")
    if count < 1:
        raise RepresentationError("count must be positive")
    bvp = bvp or CollocationBVP(F, nodes)
    chi_k = chi_constants(n)[k - 1] if chi is None else chi
    ls = np.arange(1, count + extra + 2)
    preds = main_term(n, k, ls, chi_k)
    radius = abs(main_term(n, k, count + extra + 0.5, chi_k))
    small = CollocationBVP(F, 65) if nodes > 65 else bvp
    pencil = small.pencil_eigenvalues(k)
    seeds = list(pencil[np.abs(pencil) < 1.2 * radius]) + list(preds)
    expected = count_zeros(bvp, k, radius)
    roots = _roots_in_disk(bvp, k, radius, seeds)
    if len(roots) < expected:
        log.info("k=%d: %d of %d zeros after first pass; using full pencil", k, len(roots), expected)
        full = bvp.pencil_eigenvalues(k)
        roots = _dedupe(roots + _roots_in_disk(bvp, k, radius, full[np.abs(full) < 1.2 * radius]))
    if len(roots) != expected:
        for z in roots:
            w = winding_number(bvp, k, z, 0.25 * max(1e-6 * abs(z), _nearest(z, roots)), 16)
            if round(w.real) > 1:
                raise MultiplicityError(f"multiple eigenvalue near {z:.10g} (winding {w.real:.2f})")
        raise WindingError(
            f"k={k}: located {len(roots)} zeros but the winding count is {expected}",
            expected=expected,
            counted=len(roots),
        )
    if expected < count:
        raise WindingError(f"k={k}: only {expected} eigenvalues inside the search disk", expected, count)
    roots = np.array(roots)
    labels = track_labels(roots, n, k, chi_k)
    order = np.argsort(labels)
    return roots[order][:count]


def _nearest(z, others):
    d = [abs(z - w) for w in others if w is not z and abs(z - w) > 0]
    return min(d) if d else max(1.0, abs(z))


def char_function(F: AssociatedMatrix, k, lam, nodes=DEFAULT_NODES):
    """Delta_{k,k}(lambda) = det [C_r^[n-j](1, lambda)], j, r = k+1..n."""
    n = F.n
    if not 1 <= k <= n - 1:
        raise RepresentationError(f"problem index k must lie in 1..{n - 1}")
    C1 = fundamental_matrix(F, lam, nodes).values[-1]
    rows = [n - j for j in range(k + 1, n + 1)]
    cols = list(range(k, n))
    return complex(np.linalg.det(C1[np.ix_(rows, cols)]))


@lru_cache(maxsize=16)
def _chi_cached(n, nodes):
    F0 = zero_matrix(n)
    bvp = CollocationBVP(F0, nodes)
    chis, resid = [], []
    for k in range(1, n):
        cap = max(6, track_cap(n, k, 30.0))
        pencil = bvp.pencil_eigenvalues(k)
        first, ok = _newton(bvp, k, pencil[np.argmin(np.abs(pencil))])
        if not ok:
            raise ExtrapolationError(f"no lowest unperturbed eigenvalue for k={k}")
        t = [track_coordinate(first, n, k).real - 1]
        for l in range(2, cap + 1):
            guess = main_term(n, k, l, t[-1])
            z, _ = _newton(bvp, k, guess)
            step = track_coordinate(z, n, k).real - l
            # Newton may stall near machine precision at large |lambda|; the
            # track check below is what guards against a wrong root
            if not np.isfinite(step) or abs(step - t[-1]) > 0.25:
                if len(t) >= 3:
                    break
                raise ExtrapolationError(f"unperturbed track for k={k} lost at l={l}")
            t.append(step)
            if len(t) >= 3 and abs(t[-1] - t[-2]) < 1e-11:
                break
        # the sequence settles exponentially until rounding at large |lambda|
        # takes over, so use the steadiest consecutive pair
        t = np.array(t)
        i = int(np.argmin(np.abs(np.diff(t))))
        chis.append(float(0.5 * (t[i] + t[i + 1])))
        resid.append(float(abs(t[i + 1] - t[i])))
    return tuple(chis), tuple(resid)


def chi_constants(n, nodes=DEFAULT_NODES, tol=1e-6, with_residuals=False):
    """Constants chi_k of the eigenvalue tracks, from the unperturbed problem.

    The sequence (1/pi) sin(pi k/n) ((-1)^(n-k) lambda0_l)^(1/n) - l settles
    exponentially fast; the mean of its steadiest consecutive pair is returned.
    """
    if n < 2:
        raise RepresentationError("order must be >= 2")
    chis, resid = _chi_cached(n, nodes)
    if max(resid) > tol:
        raise ExtrapolationError(f"chi tail did not settle (spread {max(resid):.3g})")
    return (chis, resid) if with_residuals else chis


# -- Weyl matrix and weights ----------------------------------------------------


def weyl_matrix(F: AssociatedMatrix, lam, nodes=DEFAULT_NODES, bvp=None):
    """M(lambda) = Phi(0, lambda); unit lower triangular."""
    n = F.n
    bvp = bvp or CollocationBVP(F, nodes)
    M = np.zeros((n, n), dtype=complex)
    for k in range(1, n):
        M[:, k - 1] = bvp.weyl_initial(k, lam)
    M[n - 1, n - 1] = 1.0
    for k in range(1, n):
        M[: k - 1, k - 1] = 0.0
        M[k - 1, k - 1] = 1.0
    return WeylMatrixSample(complex(lam), M)


def dual_weyl_matrix(F: AssociatedMatrix, lam, nodes=DEFAULT_NODES, bvp=None):
    """M*(lambda): Weyl matrix of the dual system at the same lambda."""
    n = F.n
    bvp = bvp or CollocationBVP.dual(F, nodes)
    M = np.zeros((n, n), dtype=complex)
    for k in range(1, n + 1):
        M[:, k - 1] = bvp.weyl_initial(k, lam)
    return WeylMatrixSample(complex(lam), M)


def duality_defect(F: AssociatedMatrix, lam, nodes=DEFAULT_NODES):
    """max |(M*)^T - J M^{-1} J^{-1}| with J = [(-1)^j delta_{j, n-k+1}]."""
    n = F.n
    J = np.zeros((n, n))
    J[np.arange(n), n - 1 - np.arange(n)] = (-1.0) ** np.arange(1, n + 1)
    M = weyl_matrix(F, lam, nodes).M
    Ms = dual_weyl_matrix(F, lam, nodes).M
    return float(np.max(np.abs(Ms.T - J @ np.linalg.solve(M, np.linalg.inv(J)))))


def weyl_column_entry(bvp, k, lam, row):
    """One entry M_{row,k}(lambda) (1-based row)."""
    return bvp.weyl_initial(k, lam)[row - 1]


def _circle(center, radius, nodes):
    theta = 2 * np.pi * np.arange(nodes) / nodes
    return center + radius * np.exp(1j * theta)


def weight_matrix(F, lambda0, others=None, radius=None, nodes=DEFAULT_NODES, bvp=None, qnodes=RESIDUE_NODES, tol=1e-8):
    """Weight matrix N(lambda0) = (M<0>)^{-1} M<-1> from Laurent coefficients.

    ``others`` lists the other eigenvalues (of every k) used to size the
    circle; alternatively give ``radius``.
    """
    lambda0 = complex(lambda0)
    if radius is None:
        if others is None:
            raise RadiusError("weight_matrix needs neighbouring eigenvalues or a radius")
        d = [abs(lambda0 - o) for o in others if abs(lambda0 - o) > 1e-9 * max(1.0, abs(lambda0))]
        if not d:
            raise RadiusError("no neighbouring eigenvalues to size the circle")
        radius = RADIUS_FACTOR * min(d)
    elif others is not None:
        d = [abs(lambda0 - o) for o in others if abs(lambda0 - o) > 1e-9 * max(1.0, abs(lambda0))]
        if d and radius >= 0.5 * min(d):
            raise RadiusError(f"radius {radius:.3g} reaches another eigenvalue")
    bvp = bvp or CollocationBVP(F, nodes)
    pts = _circle(lambda0, radius, qnodes)
    Ms = np.array([weyl_matrix(F, z, bvp=bvp).M for z in pts])
    M0 = np.mean(Ms, axis=0)
    Mm1 = np.mean(Ms * (pts - lambda0)[:, None, None], axis=0)
    N = np.linalg.solve(M0, Mm1)
    n = F.n
    scale = np.max(np.abs(N))
    mask = np.eye(n, k=-1, dtype=bool)
    off = np.max(np.abs(N[~mask])) if scale > 0 else 0.0
    if scale == 0 or off > tol * scale:
        raise StructuralError(f"weight matrix off-pattern entries {off:.3g} vs {scale:.3g}")
    cols = tuple(int(c) + 1 for c in np.nonzero(np.abs(np.diag(N, -1)) > tol * scale)[0])
    return WeightMatrix(lambda0, N, radius, cols)


def residue(bvp, k, lambda0, radius, qnodes=RESIDUE_NODES):
    """Res M_{k+1,k} at lambda0 by trapezoid quadrature on a circle."""
    pts = _circle(lambda0, radius, qnodes)
    vals = np.array([bvp.weyl_initial(k, z, check=False)[k] for z in pts])
    return complex(np.mean(vals * (pts - lambda0)))


def weight_numbers(F, eigenvalues, nodes=DEFAULT_NODES, degenerate_tol=1e-10):
    """SpectralData from eigenvalues ``{k: array ordered by l}``.

    beta_{l,k} is the residue of M_{k+1,k}; the circle radius is a quarter of
    the distance to the nearest other eigenvalue of the same problem, since
    column k has no other poles.
    """
    n = F.n
    bvp = CollocationBVP(F, nodes)
    ls, ks, lams, betas = [], [], [], []
    for k, lam in sorted(eigenvalues.items()):
        lam = np.asarray(lam, dtype=complex)
        for i, z in enumerate(lam):
            others = np.delete(lam, i)
            d = np.min(np.abs(others - z)) if len(others) else _spacing(n, k, z)
            d = min(d, _spacing(n, k, z))
            b = residue(bvp, k, z, RADIUS_FACTOR * d)
            if abs(b) < degenerate_tol * max(1.0, abs(z)):
                raise DegenerateWeightError(f"weight number vanishes at lambda={z:.6g}")
            ls.append(i + 1)
            ks.append(k)
            lams.append(z)
            betas.append(b)
    return SpectralData(n, ls, ks, lams, betas)


def _spacing(n, k, z):
    """Track spacing |d lambda / d l| at lambda = z."""
    c = np.pi / np.sin(np.pi * k / n)
    return n * c * max(1.0, abs(z)) ** ((n - 1) / n)


def forward_spectral_data(F, count, nodes=DEFAULT_NODES):
    """Eigenvalues and weight numbers of all problems L_1..L_{n-1}."""
    eig = {k: find_eigenvalues(F, k, count, nodes) for k in range(1, F.n)}
    return weight_numbers(F, eig, nodes)


# -- asymptotics ------------------------------------------------------------------


def remainders(data: SpectralData):
    """kappa_{l,k} (track remainder) and kappa0_{l,k} := -beta / (n lambda) - 1."""
    n = data.n
    chi = chi_constants(n)
    kap = np.empty(len(data.l), dtype=complex)
    for k in range(1, n):
        sel = data.k == k
        kap[sel] = track_coordinate(data.lam[sel], n, k) - chi[k - 1] - data.l[sel]
    kap0 = -data.beta / (n * data.lam) - 1.0
    return kap, kap0


def remainders_csv(data: SpectralData):
    kap, kap0 = remainders(data)
    rows = ["l,k,re_kappa,im_kappa,re_kappa0,im_kappa0"]
    for l, k, a, b in zip(data.l, data.k, kap, kap0):
        rows.append(f"{l},{k},{a.real:.17g},{a.imag:.17g},{b.real:.17g},{b.imag:.17g}")
    return "\n".join(rows) + "\n"


def tail_limit(values, l, powers=(1, 2, 3)):
    """Richardson-type limit of a sequence q_l = c + sum_p a_p l^{-p} + ...

    Fits the model on the last window of terms and on the same-width window
    shifted back by one; returns the last-window estimate and the
    disagreement between the two.
    """
    values = np.asarray(values, dtype=complex)
    l = np.asarray(l, dtype=float)
    if not np.all(np.isfinite(values)):
        raise FitError("non-finite values in the asymptotic sequence")

    def fit(sel):
        A = np.column_stack([np.ones(len(sel))] + [l[sel] ** (-p) for p in powers])
        c, *_ = np.linalg.lstsq(A, values[sel], rcond=None)
        return c[0]

    m = len(values)
    width = max(len(powers) + 2, m // 3)
    if m < width + 1:
        raise FitError(f"need at least {width + 1} terms for the limit, got {m}")
    last = np.arange(m - width, m)
    a, b = fit(last - 1), fit(last)
    return b, abs(a - b)


def fit_asymptotics(data: SpectralData, tol=5e-2):
    """Constants of the asymptotic expansions for n = 2, 3, 4.

    n = 2 reports only the track constants; n = 3 returns theta, the integral
    of tau_1; n = 4 returns theta, t0, t1 and sigma.
    """
    n = data.n
    if n not in (2, 3, 4):
        raise RepresentationError(f"asymptotic fitting covers n = 2, 3, 4, not {n}")
    lam, beta = data.tables()
    L = lam.shape[0]
    l = np.arange(1, L + 1, dtype=float)
    residuals = {}
    chi = []
    for k in range(1, n):
        t = track_coordinate(lam[:, k - 1], n, k) - l
        c, r = tail_limit(t, l)
        chi.append(float(c.real))
        residuals[f"chi{k}"] = r
    params = AsymptoticParameters(n, tuple(chi), residuals=residuals)
    if n == 3:
        # lambda_{l,1} = ((2 pi / sqrt 3)(l + 1/6 - theta / (2 pi^2 l) + o(1/l)))^3
        u = np.sqrt(3) / (2 * np.pi) * lam[:, 0] ** (1.0 / 3) - l - 1.0 / 6
        theta, r = tail_limit(-2 * np.pi**2 * l * u, l)
        params.theta = complex(theta)
        params.sigma_int = complex(theta)
        residuals["theta"] = r
    elif n == 4:
        A = np.pi * l + np.pi / 2
        lam2, beta2 = lam[:, 1], beta[:, 1]
        theta, r0 = tail_limit(A**2 - lam2 / A**2, l)
        t0s, r1 = tail_limit(-((np.pi * l) ** 2) * (beta2 + 4 * lam2) / lam2, l)
        t01, r2 = tail_limit(lam2 / A - A**3 + theta * A, l)
        sig, r3 = tail_limit((lam[:, 0] - lam[:, 2]) / (8 * (np.pi * l + np.pi / 4)), l)
        params.theta = float(theta.real)
        params.t0 = float((t0s - 2 * theta).real)
        params.t1 = float((t01 - t0s + 2 * theta).real)
        params.sigma_int = complex(sig)
        residuals.update(theta=r0, t0=r1, t1=r2, sigma=r3)
    for key, r in residuals.items():
        if not np.isfinite(r) or r > tol:
            raise FitError(f"asymptotic fit for {key} did not settle (disagreement {r:.3g})")
    return params


# -- validation -------------------------------------------------------------------


@dataclass
class CheckResult:
    passed: bool
    evidence: float
    detail: str = ""


@dataclass
class ValidationReport:
    checks: dict = field(default_factory=dict)

    @property
    def overall_pass(self):
        return all(c.passed for c in self.checks.values())

    def failed(self):
        return [name for name, c in self.checks.items() if not c.passed]

    def __str__(self):
        lines = []
        for name, c in self.checks.items():
            lines.append(f"{name}: {'pass' if c.passed else 'FAIL'} ({c.evidence:.3g}) {c.detail}".rstrip())
        return "\n".join(lines)


CHECK_NAMES = (
    "distinct-eigenvalues",
    "neighbour-disjoint",
    "conjugate-symmetry",
    "sign-condition",
    "beta-nonzero",
    "non-overlap",
    "l2-tail",
)


def xi_weights(data: SpectralData, model: SpectralData):
    """xi_l = sum_k (l^-(n-1) |lambda - lambda~| + l^-n |beta - beta~|)."""
    if data.n != model.n:
        raise IndexMismatchError("orders differ")
    if not (np.array_equal(data.l, model.l) and np.array_equal(data.k, model.k)):
        raise IndexMismatchError("data and model index ranges differ")
    n = data.n
    lam, beta = data.tables()
    mlam, mbeta = model.tables()
    l = np.arange(1, lam.shape[0] + 1, dtype=float)[:, None]
    xi = l ** (-(n - 1)) * np.abs(lam - mlam) + l ** (-n) * np.abs(beta - mbeta)
    return xi.sum(axis=1)


def validate_spectral_data(data, model, tol=1e-7, l2_threshold=0.1, distinct_tol=1e-10, overlap_tol=1e-12):
    """Itemized check of the hypotheses under which the main equation is solvable."""
    if data.n != model.n:
        raise IndexMismatchError("orders differ")
    n = data.n
    rep = ValidationReport()
    scale = max(1.0, float(np.max(np.abs(data.lam))))
    # distinct eigenvalues within each problem
    worst, where = np.inf, ""
    for k in range(1, n):
        z = data.lam[data.k == k]
        if len(z) > 1:
            d = np.abs(z[:, None] - z[None, :])
            np.fill_diagonal(d, np.inf)
            i, j = np.unravel_index(np.argmin(d), d.shape)
            if d[i, j] < worst:
                worst, where = d[i, j], f"k={k} l={data.l[data.k == k][i]},{data.l[data.k == k][j]}"
    rep.checks["distinct-eigenvalues"] = CheckResult(bool(worst > distinct_tol * scale), float(worst / scale), where)
    # neighbouring problems share no eigenvalue
    worst, where = np.inf, ""
    for k in range(1, n - 1):
        a, b = data.lam[data.k == k], data.lam[data.k == k + 1]
        if len(a) and len(b):
            d = np.abs(a[:, None] - b[None, :])
            i, j = np.unravel_index(np.argmin(d), d.shape)
            if d[i, j] < worst:
                worst, where = d[i, j], f"k={k},{k + 1}"
    rep.checks["neighbour-disjoint"] = CheckResult(bool(worst > distinct_tol * scale), float(worst / scale), where)
    # lambda_{l,k} = (-1)^n conj lambda_{l,n-k}, same for beta
    worst, where = 0.0, ""
    sign = (-1) ** n
    for l, k, lam, beta in zip(data.l, data.k, data.lam, data.beta):
        sel = (data.l == l) & (data.k == n - k)
        if not sel.any():
            worst, where = np.inf, f"missing partner of l={l} k={k}"
            continue
        pl, pb = data.lam[sel][0], data.beta[sel][0]
        e = max(
            abs(lam - sign * np.conj(pl)) / max(1.0, abs(lam)),
            abs(beta - sign * np.conj(pb)) / max(1.0, abs(beta)),
        )
        if e > worst:
            worst, where = e, f"l={l} k={k}"
    rep.checks["conjugate-symmetry"] = CheckResult(bool(worst <= tol), float(worst), where)
    # sign conditions
    p = n // 2
    sel = data.k == p
    if n % 2 == 0:
        v = (-1) ** (p + 1) * data.beta[sel]
        ok = (v.real > 0) & (np.abs(v.imag) <= tol * np.abs(v))
        what = f"(-1)^{p + 1} beta_(l,{p}) > 0"
    else:
        v = (-1) ** (p + 1) * data.lam[sel]
        ok = v.real > 0
        what = f"(-1)^{p + 1} Re lambda_(l,{p}) > 0"
    bad = data.l[sel][~ok]
    detail = what + (f"; fails at l={bad.tolist()}" if len(bad) else "")
    rep.checks["sign-condition"] = CheckResult(bool(ok.all()), float(np.min(v.real)) if len(v) else 0.0, detail)
    # nonzero weights
    mb = float(np.min(np.abs(data.beta) / np.maximum(1.0, np.abs(data.lam))))
    rep.checks["beta-nonzero"] = CheckResult(bool(mb > distinct_tol), mb)
    # data and model spectra disjoint; rows equal to the model cancel out and are exempt
    active = np.ones(len(data.l), dtype=bool)
    if np.array_equal(data.l, model.l) and np.array_equal(data.k, model.k) and data.is_rectangular():
        lam_t, beta_t = data.tables()
        mlam_t, mbeta_t = model.tables()
        same = (lam_t == mlam_t).all(axis=1) & (beta_t == mbeta_t).all(axis=1)
        active = ~same[data.l - 1]
    if active.any():
        # relative to the eigenvalue itself: perturbations decay like l^-2
        # while the eigenvalues grow like l^n
        d = np.abs(data.lam[active][:, None] - model.lam[None, :]) / np.maximum(1.0, np.abs(model.lam))[None, :]
        i, j = np.unravel_index(np.argmin(d), d.shape)
        rel = float(d[i, j])
        rep.checks["non-overlap"] = CheckResult(
            bool(rel > overlap_tol), rel, f"closest pair l={data.l[active][i]} k={data.k[active][i]}"
        )
    else:
        # nothing left to recover; the data must be told apart from the model
        rep.checks["non-overlap"] = CheckResult(False, 0.0, "data equal the model")
    # l2 condition on {l^(n-2) xi_l}: partial sums flat over the last third
    try:
        xi = xi_weights(data, model)
        l = np.arange(1, len(xi) + 1, dtype=float)
        s = np.cumsum((l ** (n - 2) * xi) ** 2)
        m = len(s)
        head = s[max(0, m - 1 - m // 3) - 1] if m - 1 - m // 3 > 0 else 0.0
        frac = 0.0 if s[-1] == 0 else float((s[-1] - head) / s[-1])
        rep.checks["l2-tail"] = CheckResult(bool(frac <= l2_threshold), frac, f"total {s[-1]:.3g}")
    except IndexMismatchError as exc:
        rep.checks["l2-tail"] = CheckResult(False, np.inf, str(exc))
    return rep
