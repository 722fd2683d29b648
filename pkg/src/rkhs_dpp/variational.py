"""Finite variational principle and its window sequences.

For a positive-definite ``C`` on a finite window, a site ``x0`` and disjoint
sets ``L1``, ``L2`` not containing it::

    a = min_{f on L1} ||e_x0 - f||_-^2,   ||f||_-^2 = f^T C f
    b = min_{g on L2} ||e_x0 - g||_+^2,   ||g||_+^2 = g^T C^{-1} g

Both are Schur complements onto ``x0`` (of ``C`` and ``C^{-1}``
respectively) and ``a * b = 1`` whenever ``{x0}, L1, L2`` partition the
window.  On the lattice the window grows, giving nonincreasing sequences
``alpha_L`` and ``beta_L`` whose limits multiply to one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import OverlappingSets, SiteNotInWindow
from .kernel import (
    KernelMatrix,
    inverse,
    inverse_restricted,
    materialize,
    schur_value,
    submatrix,
)
from .operators import OperatorSpec
from .traces import ConvergenceTrace
from .windows import SiteRule, as_configuration, check_nested, enlarge, window_label


@dataclass(frozen=True)
class TriplePartition:
    x0: int
    r1: tuple
    r2: tuple

    def __post_init__(self):
        r1 = as_configuration(self.r1)
        r2 = as_configuration(self.r2)
        object.__setattr__(self, "r1", r1)
        object.__setattr__(self, "r2", r2)
        if self.x0 in r1 or self.x0 in r2 or set(r1) & set(r2):
            raise OverlappingSets("x0, r1 and r2 must be pairwise disjoint")

    def check_covers(self, window: Sequence[int]) -> None:
        parts = {self.x0, *self.r1, *self.r2}
        if parts != set(window):
            raise SiteNotInWindow("partition does not cover the host window exactly")

    @classmethod
    def from_rule(cls, window: Sequence[int], x0: int, r1_rule: SiteRule) -> "TriplePartition":
        r1 = r1_rule.select(window, exclude=(x0,))
        r2 = tuple(s for s in window if s != x0 and s not in set(r1))
        return cls(x0, r1, r2)


@dataclass(frozen=True)
class VariationalResult:
    value: float
    minimizer: np.ndarray  # indexed by the optimized sub-window
    sites: tuple = ()


def _check_args(c: KernelMatrix, x0: int, sub: Sequence[int]) -> tuple:
    sub = as_configuration(sub)
    if x0 in sub:
        raise OverlappingSets(f"x0={x0} belongs to the optimization set")
    c.index([x0, *sub])
    return sub


def objective(c: np.ndarray, f: np.ndarray) -> float:
    """Quadratic form ``(e_0 - f)^T c (e_0 - f)`` where index 0 is x0 and ``f`` fills the rest."""
    v = np.concatenate(([1.0], -np.asarray(f, dtype=float)))
    return float(v @ c @ v)


def finite_a(c: KernelMatrix, x0: int, lambda1: Sequence[int]) -> VariationalResult:
    """Minimum of ``||e_x0 - f||_-^2`` over f supported on ``lambda1``.

    value: Schur complement of ``C(x0 L1, x0 L1)`` onto x0;
    minimizer: ``C(L1, L1)^{-1} C(L1, x0)``.
    """
    l1 = _check_args(c, x0, lambda1)
    if not l1:
        return VariationalResult(c[x0, x0], np.zeros(0), l1)
    block = submatrix(c, as_configuration((x0, *l1)))
    value = schur_value(block, x0)
    inner = submatrix(c, l1)
    f0 = inner.solve(c.block(l1, [x0])[:, 0])
    return VariationalResult(value, f0, l1)


def finite_b(c: KernelMatrix, x0: int, lambda2: Sequence[int]) -> VariationalResult:
    """Minimum of ``||e_x0 - g||_+^2`` over g supported on ``lambda2``.

    Same as :func:`finite_a` applied to ``C^{-1}``.
    """
    l2 = _check_args(c, x0, lambda2)
    keep = as_configuration((x0, *l2))
    cinv = inverse(c) if len(keep) == len(c) else inverse_restricted(c, keep)
    return finite_a(cinv, x0, l2)


def verify_ab(c: KernelMatrix, part: TriplePartition) -> float:
    """``|a * b - 1|`` for a partition of the whole window."""
    part.check_covers(c.window)
    a = finite_a(c, part.x0, part.r1).value
    b = finite_b(c, part.x0, part.r2).value
    return abs(a * b - 1.0)


# three closed forms of the same minimum, used to cross-check each other


def a_by_determinants(c: KernelMatrix, x0: int, lambda1: Sequence[int]) -> float:
    from .kernel import log_det

    l1 = as_configuration(lambda1)
    num = log_det(submatrix(c, as_configuration((x0, *l1))))
    den = log_det(submatrix(c, l1)) if l1 else 0.0
    return float(np.exp(num - den))


def a_by_inverse_entry(c: KernelMatrix, x0: int, lambda1: Sequence[int]) -> float:
    block = submatrix(c, as_configuration((x0, *lambda1)))
    return 1.0 / inverse(block)[x0, x0]


def a_by_schur(c: KernelMatrix, x0: int, lambda1: Sequence[int]) -> float:
    """``C(x0,x0) - C(x0,L1) C(L1,L1)^{-1} C(L1,x0)`` via an explicit solve."""
    l1 = as_configuration(lambda1)
    if not l1:
        return c[x0, x0]
    cross = c.block(l1, [x0])[:, 0]
    return c[x0, x0] - float(cross @ submatrix(c, l1).solve(cross))


def b_forms(c: KernelMatrix, x0: int, lambda2: Sequence[int]) -> tuple[float, float, float]:
    cinv = inverse(c)
    return (
        a_by_determinants(cinv, x0, lambda2),
        a_by_inverse_entry(cinv, x0, lambda2),
        a_by_schur(cinv, x0, lambda2),
    )


# ---------------------------------------------------------------------------
# window sequences
# ---------------------------------------------------------------------------


def _labels(schedule):
    return tuple(window_label(w) for w in schedule), tuple(len(w) for w in schedule)


def alpha_trace(spec: OperatorSpec, x0: int, r1_rule: SiteRule, schedule) -> ConvergenceTrace:
    """``alpha_L = finite_a(A_L, x0, L & R1)`` over a nested schedule; nonincreasing."""
    schedule = [tuple(w) for w in schedule]
    check_nested(schedule)
    values = []
    for w in schedule:
        c = materialize(spec, w)
        values.append(finite_a(c, x0, r1_rule.select(w, exclude=(x0,))).value)
    labels, sizes = _labels(schedule)
    return ConvergenceTrace(labels, sizes, tuple(values), "decreasing")


def beta_trace(
    spec: OperatorSpec,
    x0: int,
    r2_rule: SiteRule,
    schedule,
    ambient_factor: int = 4,
    fixed_ambient: bool = False,
) -> ConvergenceTrace:
    """``beta_L`` with the ``+`` norm taken from an ambient truncation of the inverse.

    Each window ``L`` is paired with the ambient ``enlarge(L, ambient_factor)``
    (or, with ``fixed_ambient``, the ambient of the last window for every
    point).  Only a fixed ambient guarantees a nonincreasing trace, so the
    declared direction is ``decreasing`` in that case and ``none`` otherwise.
    """
    schedule = [tuple(w) for w in schedule]
    check_nested(schedule)
    values = []
    shared = None
    if fixed_ambient:
        shared = materialize(spec, enlarge(schedule[-1], ambient_factor))
    for w in schedule:
        c = shared if shared is not None else materialize(spec, enlarge(w, ambient_factor))
        values.append(finite_b(c, x0, r2_rule.select(w, exclude=(x0,))).value)
    labels, sizes = _labels(schedule)
    return ConvergenceTrace(labels, sizes, tuple(values), "decreasing" if fixed_ambient else "none")


@dataclass(frozen=True)
class LimitCheck:
    residual: float
    alpha: ConvergenceTrace
    beta: ConvergenceTrace


def alpha_beta_limit_check(
    spec: OperatorSpec,
    x0: int,
    r1_rule: SiteRule,
    schedule,
    ambient_factor: int = 4,
    fixed_ambient: bool = False,
) -> LimitCheck:
    """``|alpha_hat * beta_hat - 1|`` from the final points of both traces, with R2 the complement of R1."""
    alpha = alpha_trace(spec, x0, r1_rule, schedule)
    beta = beta_trace(spec, x0, r1_rule.complement(), schedule, ambient_factor, fixed_ambient)
    return LimitCheck(abs(alpha.final * beta.final - 1.0), alpha, beta)


def a2_support_residual(
    spec: OperatorSpec, x0: int, r1_rule: SiteRule, window, ambient_factor: int = 4
) -> float:
    """Mass on R1 of ``A(e_x0 - f0)`` outside the optimized window, relative to ``alpha``.

    In the infinite system ``A(e_x0 - f) - alpha e_x0`` lives on R2; at a
    finite window the normal equations only zero it on ``L & R1``, and the
    remaining mass on ``R1`` (inside the ambient) is reported here.
    """
    window = tuple(window)
    ambient = enlarge(window, ambient_factor)
    c = materialize(spec, window)
    l1 = r1_rule.select(window, exclude=(x0,))
    res = finite_a(c, x0, l1)
    support = (x0, *l1)
    vec = np.concatenate(([1.0], -res.minimizer))
    image = spec.block(ambient, support) @ vec
    on_r1 = np.array([r1_rule(s) and s != x0 for s in ambient])
    return float(np.abs(image[on_r1]).max(initial=0.0) / res.value)
