import numpy as np
import pytest

from spectralmap.assoc import associated_matrix
from spectralmap.coefficients import CoefficientSet, random_selfadjoint
from spectralmap.forward import forward_spectral_data

_cache = {}


def spectral_data(coeffs, L, key):
    """Forward data cached for the whole session under ``key``."""
    if key not in _cache:
        _cache[key] = forward_spectral_data(associated_matrix(coeffs), L)
    return _cache[key]


@pytest.fixture(scope="session")
def zero_data():
    def get(n, L):
        return spectral_data(CoefficientSet.zero(n), L, ("zero", n, L))

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_problem(n, seed, scale=1.0):
    return random_selfadjoint(n, np.random.default_rng(seed), scale=scale)


# acceptance results, printed one line per criterion at the end of the run
ACCEPTANCE = {}


def record(criterion, part, passed, detail=""):
    """Store the outcome of one part of an acceptance criterion and print it."""
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
    print(f"criterion {criterion} [{part}]: {'PASS' if passed else 'FAIL'} {detail}".rstrip())
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[criterion]
        ok = all(p for _, p, _ in parts)
        detail = "; ".join(f"{name} {'ok' if p else 'FAILED'} {d}".rstrip() for name, p, d in parts)
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
