"""Brute-force references over all configurations of a small window.

Nothing here reuses the factorizations of the main library: determinants
come from cofactor expansion (n <= 6) or a hand-rolled LU with partial
pivoting, window probabilities from the mixed-row determinant
``det(P_xi K + P_{not xi} (I - K))``, and the variational minimum from
the normal equations.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import InvariantViolation, OverlappingSets, SiteNotInWindow, WindowTooLarge
from .traces import fmt
from .variational import VariationalResult

MAX_SITES = 20
COFACTOR_MAX = 6


def det_cofactor(m) -> float:
    """Laplace expansion along the first row."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n == 0:
        return 1.0
    if n == 1:
        return float(m[0, 0])
    if n == 2:
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    total = 0.0
    cols = np.arange(n)
    for j in range(n):
        if m[0, j] == 0.0:
            continue
        minor = m[1:][:, cols != j]
        total += (-1) ** j * m[0, j] * det_cofactor(minor)
    return float(total)


def det_lu(m) -> float:
    """Gaussian elimination with partial pivoting."""
    a = np.array(m, dtype=float)
    n = a.shape[0]
    sign = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if a[p, k] == 0.0:
            return 0.0
        if p != k:
            a[[k, p]] = a[[p, k]]
            sign = -sign
        a[k + 1:, k:] -= np.outer(a[k + 1:, k] / a[k, k], a[k, k:])
    return float(sign * np.prod(np.diag(a)))


def det(m) -> float:
    m = np.asarray(m, dtype=float)
    return float(det_cofactor(m) if m.shape[0] <= COFACTOR_MAX else det_lu(m))


@dataclass(frozen=True)
class ExactDistribution:
    """Probabilities of every configuration, keyed by sorted site tuples."""

    window: tuple
    probs: dict

    def __getitem__(self, config) -> float:
        return self.probs[tuple(sorted(config))]

    def total(self) -> float:
        return float(sum(self.probs.values()))

    def bitmask(self, config: Iterable[int]) -> int:
        pos = {s: i for i, s in enumerate(self.window)}
        return sum(1 << pos[s] for s in config)

    def to_csv(self) -> str:
        """Columns ``config,probability``; config is a bitmask over window positions."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["config", "probability"])
        rows = sorted((self.bitmask(c), p) for c, p in self.probs.items())
        for mask, p in rows:
            w.writerow([mask, fmt(p)])
        return buf.getvalue()


def _subsets(window):
    for r in range(len(window) + 1):
        yield from combinations(window, r)


def enumerate_distribution(model, atol: float = 1e-9) -> ExactDistribution:
    """Tabulate ``P(config & window = xi)`` for all ``2^n`` subsets of the window."""
    window = tuple(model.window)
    n = len(window)
    if n > MAX_SITES:
        raise WindowTooLarge(f"{n} sites exceeds the oracle cap of {MAX_SITES}")
    k = np.asarray(model.k_matrix, dtype=float)
    imk = np.eye(n) - k
    probs = {}
    for xi in _subsets(window):
        rows = np.zeros(n, dtype=bool)
        rows[[window.index(s) for s in xi]] = True
        probs[xi] = det(np.where(rows[:, None], k, imk))
    dist = ExactDistribution(window, probs)
    if abs(dist.total() - 1.0) > atol:
        raise InvariantViolation("oracle_normalization", f"probabilities sum to {dist.total()!r}")
    return dist


def oracle_correlation(dist: ExactDistribution, X: Iterable[int]) -> float:
    """``P(X is contained in the configuration)`` by summation."""
    X = set(X)
    missing = X - set(dist.window)
    if missing:
        raise SiteNotInWindow(f"sites {sorted(missing)} are not in the window")
    return float(sum(p for c, p in dist.probs.items() if X <= set(c)))


def oracle_minimize(c, x0: int, lambda1: Sequence[int]) -> VariationalResult:
    """Minimize ``(e_x0 - f)^T C (e_x0 - f)`` over f on ``lambda1`` via the normal equations."""
    window = list(c.window)
    if x0 in set(lambda1):
        raise OverlappingSets(f"x0={x0} belongs to the optimization set")
    try:
        i0 = window.index(x0)
        idx = [window.index(s) for s in sorted(lambda1)]
    except ValueError:
        raise SiteNotInWindow("site outside the window") from None
    m = np.asarray(c.entries, dtype=float)
    if not idx:
        return VariationalResult(float(m[i0, i0]), np.zeros(0), ())
    g = m[np.ix_(idx, idx)]
    rhs = m[idx, i0]
    f = np.linalg.solve(g, rhs)
    v = np.zeros(len(window))
    v[i0] = 1.0
    v[idx] -= f
    return VariationalResult(float(v @ m @ v), f, tuple(sorted(lambda1)))
