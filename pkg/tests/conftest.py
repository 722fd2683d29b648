import numpy as np
import pytest

from rkhs_dpp import Explicit, KernelMatrix, Toeplitz, interval


def random_pd(rng, n, cond=50.0):
    """Random symmetric PD matrix with eigenvalues spread over [1/cond, 1]."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    ev = np.exp(rng.uniform(-np.log(cond), 0.0, size=n))
    m = (q * ev) @ q.T
    return 0.5 * (m + m.T)


def random_kernel(rng, n, lo=0):
    return KernelMatrix(interval(lo, lo + n - 1), random_pd(rng, n))


def random_explicit(rng, n, lo=-8, scale=1.0):
    """Explicit spec on {lo, ..., lo+n-1}."""
    sites = interval(lo, lo + n - 1)
    return Explicit(sites, scale * random_pd(rng, n))


def random_banded(rng, band=2):
    """Toeplitz spec with a strictly dominant diagonal (positive symbol)."""
    off = rng.uniform(-1.0, 1.0, size=band)
    off *= 0.9 / max(2 * np.abs(off).sum(), 1e-12)
    return Toeplitz((1.0, *off.tolist()))


def random_partition(rng, window):
    window = list(window)
    x0 = window[rng.integers(len(window))]
    rest = [s for s in window if s != x0]
    mask = rng.random(len(rest)) < 0.5
    r1 = tuple(s for s, m in zip(rest, mask) if m)
    r2 = tuple(s for s, m in zip(rest, mask) if not m)
    return x0, r1, r2


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tri():
    """[[2,1,0],[1,2,1],[0,1,2]] on {0,1,2}."""
    return KernelMatrix((0, 1, 2), [[2, 1, 0], [1, 2, 1], [0, 1, 2]])


ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    """Record and print one acceptance line."""
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
