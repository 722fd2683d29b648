"""Dense positive-definite matrix algebra on finite windows.

Every matrix carries the window that labels its rows and columns, so
restrictions and Schur complements are expressed in terms of sites rather
than positions.  Factorizations are plain Cholesky; a matrix that fails the
factorization is rejected, never regularized.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.linalg as la

from .errors import NotPositiveDefinite, NotSymmetric, SiteNotInWindow
from .operators import OperatorSpec
from .traces import ConvergenceTrace
from .windows import as_window, check_nested, positions, window_label

SYMMETRY_RTOL = 1e-12


def cholesky(m: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, raising NotPositiveDefinite on failure."""
    if m.shape[0] == 0:
        return np.zeros((0, 0))
    try:
        chol = la.cholesky(m, lower=True, check_finite=True)
    except (la.LinAlgError, ValueError) as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if not np.all(np.diag(chol) > 0):
        raise NotPositiveDefinite("non-positive Cholesky pivot")
    return chol


class KernelMatrix:
    """Symmetric positive-definite matrix indexed by a window.

    Construction symmetrizes entries that agree to ``SYMMETRY_RTOL`` and
    factors them; both the entries and the factor are read-only.
    """

    __slots__ = ("window", "entries", "chol", "_index")

    def __init__(self, window: Sequence[int], entries, chol: np.ndarray | None = None):
        window = as_window(window)
        m = np.array(entries, dtype=float, copy=True).reshape(len(window), len(window))
        scale = max(np.abs(m).max(initial=0.0), np.finfo(float).tiny)
        if np.abs(m - m.T).max(initial=0.0) > SYMMETRY_RTOL * scale:
            raise NotSymmetric("kernel matrix is not symmetric")
        m = 0.5 * (m + m.T)
        if chol is None:
            chol = cholesky(m)
        m.setflags(write=False)
        chol.setflags(write=False)
        self.window = window
        self.entries = m
        self.chol = chol
        self._index = None

    def __len__(self):
        return len(self.window)

    def __repr__(self):
        return f"KernelMatrix({window_label(self.window)}, n={len(self)})"

    def index(self, sites: Sequence[int]) -> list[int]:
        if self._index is None:
            self._index = {s: i for i, s in enumerate(self.window)}
        try:
            return [self._index[s] for s in sites]
        except KeyError as exc:
            raise SiteNotInWindow(f"site {exc.args[0]} is not in the window") from None

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        """Raw (not necessarily square) sub-block by sites."""
        return self.entries[np.ix_(self.index(rows), self.index(cols))]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return la.cho_solve((self.chol, True), rhs)

    def __getitem__(self, pair):
        x, y = pair
        i, j = self.index([x, y])
        return float(self.entries[i, j])


def materialize(spec: OperatorSpec, window: Sequence[int], shift: float = 0.0) -> KernelMatrix:
    """Entries ``A(x, y) + shift * delta_xy`` on ``window``."""
    window = as_window(window)
    if not window:
        raise ValueError("cannot materialize on an empty window")
    if shift < 0 or not np.isfinite(shift):
        raise ValueError("epsilon shift must be a finite nonnegative number")
    m = spec.matrix(window)
    if shift:
        m = m + shift * np.eye(len(window))
    return KernelMatrix(window, m)


def submatrix(m: KernelMatrix, sub: Sequence[int]) -> KernelMatrix:
    """Principal submatrix on the sites ``sub`` (kept in the order given)."""
    sub = as_window(sub)
    idx = m.index(sub)
    if len(idx) == len(m) and idx == list(range(len(m))):
        return m
    return KernelMatrix(sub, m.entries[np.ix_(idx, idx)])


def log_det(m: KernelMatrix) -> float:
    """``log det M`` from the Cholesky diagonal; 0 for the empty matrix."""
    if len(m) == 0:
        return 0.0
    return float(2.0 * np.log(np.diag(m.chol)).sum())


def schur_complement(m: KernelMatrix, keep: Sequence[int]) -> KernelMatrix:
    """``M(keep, keep) - M(keep, elim) M(elim, elim)^{-1} M(elim, keep)``.

    ``elim`` is the rest of the window.  Computed with a single Cholesky
    factorization of M reordered as [elim, keep]: the trailing diagonal
    block ``L22`` of the factor satisfies ``L22 L22^T = Schur``.
    """
    keep = as_window(keep)
    keep_idx = m.index(keep)
    keep_set = set(keep)
    elim_idx = [i for i, s in enumerate(m.window) if s not in keep_set]
    if not elim_idx:
        return submatrix(m, keep)
    order = elim_idx + keep_idx
    chol = cholesky(m.entries[np.ix_(order, order)])
    l22 = chol[len(elim_idx):, len(elim_idx):]
    return KernelMatrix(keep, l22 @ l22.T, chol=np.array(l22))


def schur_value(m: KernelMatrix, x0: int) -> float:
    """Scalar Schur complement of ``m`` onto the single site ``x0``."""
    return schur_complement(m, (x0,)).entries[0, 0]


def inverse(m: KernelMatrix) -> KernelMatrix:
    """``M^{-1}`` on the same window."""
    if len(m) == 0:
        return m
    inv = la.cho_solve((m.chol, True), np.eye(len(m)))
    return KernelMatrix(m.window, 0.5 * (inv + inv.T))


def inverse_restricted(m: KernelMatrix, target: Sequence[int]) -> KernelMatrix:
    """``(M^{-1})_target`` without forming the whole inverse."""
    target = as_window(target)
    idx = m.index(target)
    rhs = np.zeros((len(m), len(idx)))
    rhs[idx, np.arange(len(idx))] = 1.0
    cols = m.solve(rhs)[idx, :]
    return KernelMatrix(target, 0.5 * (cols + cols.T))


def min_eig(sym: np.ndarray) -> float:
    if sym.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(0.5 * (sym + sym.T))[0])


def loewner_gap(upper: KernelMatrix | np.ndarray, lower: KernelMatrix | np.ndarray) -> float:
    """Smallest eigenvalue of ``upper - lower``; nonnegative iff ``lower <= upper``."""
    u = upper.entries if isinstance(upper, KernelMatrix) else np.asarray(upper)
    lo = lower.entries if isinstance(lower, KernelMatrix) else np.asarray(lower)
    return min_eig(u - lo)


def spectral_norm(m: KernelMatrix | np.ndarray) -> float:
    a = m.entries if isinstance(m, KernelMatrix) else np.asarray(m)
    if a.size == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvalsh(0.5 * (a + a.T))).max())


def approx_B(
    spec: OperatorSpec,
    target: Sequence[int],
    ambient_schedule: Sequence[Sequence[int]],
    shift: float = 0.0,
) -> ConvergenceTrace:
    """Nested-ambient approximations ``((A_Delta)^{-1})_target`` of the inverse kernel.

    The sequence is nondecreasing in Loewner order and bounded by the true
    inverse kernel whenever that exists; its last element is the reported
    approximation.  ``trace.converged()`` judges whether successive
    elements agree to 1e-8 in max-norm.
    """
    target = as_window(target)
    schedule = [as_window(w) for w in ambient_schedule]
    check_nested(schedule)
    for w in schedule:
        positions(w, target)
    values = [inverse_restricted(materialize(spec, w, shift), target) for w in schedule]
    return ConvergenceTrace(
        labels=tuple(window_label(w) for w in schedule),
        n_sites=tuple(len(w) for w in schedule),
        values=tuple(values),
        monotone_dir="increasing",
    )


def schur_gap(base: np.ndarray, d1: np.ndarray, d2: np.ndarray) -> float:
    """``s(base - d1) - s(base - d2)`` without cancellation.

    ``s(M)`` is the Schur complement of M onto index 0, i.e.
    ``1 / (M^{-1})[0, 0]``.  With ``M_i = base - d_i`` the difference equals
    ``s(M_1) s(M_2) (M_2^{-1} e_0)^T (d_2 - d_1) (M_1^{-1} e_0)``, which keeps
    full relative accuracy when the two corrections are tiny compared with
    ``base``.  Both ``M_i`` must be positive definite.
    """
    base = np.asarray(base, dtype=float)
    e0 = np.zeros(base.shape[0])
    e0[0] = 1.0
    u1 = la.cho_solve((cholesky(base - d1), True), e0)
    u2 = la.cho_solve((cholesky(base - d2), True), e0)
    s1, s2 = 1.0 / u1[0], 1.0 / u2[0]
    return float(s1 * s2 * (u2 @ (np.asarray(d2) - np.asarray(d1)) @ u1))
