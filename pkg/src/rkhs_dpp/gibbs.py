"""Boundary-conditioned energies and the Gibbs specification of the DPP.

With interaction ``V(xi) = -log det A(xi, xi)``, the energy of ``zeta``
inside ``L`` given a boundary configuration ``xi`` read on ``D - L`` is the
log of a Schur complement::

    Phi = A(L, L) - A(L, b) A(b, b)^{-1} A(b, L),    b = xi & (D - L)
    H_{L;D}(zeta; xi) = -log det Phi(zeta, zeta)

Growing ``D`` adds boundary sites to eliminate, so ``Phi`` can only shrink
in Loewner order and the energy can only grow.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as la

from .dpp import DppWindowModel, build_model
from .errors import OverlappingSets
from .kernel import (
    KernelMatrix,
    cholesky,
    log_det,
    materialize,
    schur_complement,
    schur_gap,
    submatrix,
)
from .operators import OperatorSpec
from .traces import ConvergenceTrace
from .windows import SiteRule, as_configuration, as_window, check_nested, check_subset, positions, window_label


def potential(spec: OperatorSpec, xi: Iterable[int]) -> float:
    """``V(xi) = -log det A(xi, xi)``; 0 for the empty configuration."""
    xi = as_configuration(xi)
    if not xi:
        return 0.0
    return -log_det(materialize(spec, xi))


def mutual_energy(spec: OperatorSpec, xi1: Iterable[int], xi2: Iterable[int]) -> float:
    """``W = V(xi1 u xi2) - V(xi1) - V(xi2)`` for disjoint configurations."""
    a, b = as_configuration(xi1), as_configuration(xi2)
    if set(a) & set(b):
        raise OverlappingSets("configurations must be disjoint")
    if not a or not b:
        return 0.0
    return potential(spec, a + b) - potential(spec, a) - potential(spec, b)


@dataclass(frozen=True)
class BoundaryCondition:
    """Interior window and a finite boundary configuration.

    ``xi`` may contain interior sites; they are ignored, only
    ``xi - interior`` ever enters a computation.
    """

    interior: tuple
    xi: tuple

    def __post_init__(self):
        object.__setattr__(self, "interior", as_window(self.interior))
        object.__setattr__(self, "xi", as_configuration(self.xi))

    def boundary(self, ambient: Sequence[int]) -> tuple:
        """``xi & (ambient - interior)``."""
        check_subset(self.interior, ambient)
        inside = set(self.interior)
        amb = set(ambient)
        return tuple(s for s in self.xi if s in amb and s not in inside)

    @classmethod
    def from_rule(cls, interior: Sequence[int], rule: SiteRule, ambient: Sequence[int]) -> "BoundaryCondition":
        return cls(interior, rule.select(ambient))


def _reduce(spec: OperatorSpec, keep: tuple, boundary: tuple) -> KernelMatrix:
    """Schur complement of A on ``keep u boundary`` onto ``keep``."""
    if not boundary:
        return materialize(spec, keep)
    host = as_configuration(keep + boundary)
    return schur_complement(materialize(spec, host), keep)


def phi_matrix(spec: OperatorSpec, bc: BoundaryCondition, ambient: Sequence[int]) -> KernelMatrix:
    """``Phi`` on the interior, with the boundary read on ``ambient - interior``."""
    return _reduce(spec, bc.interior, bc.boundary(ambient))


def _zeta(zeta, bc: BoundaryCondition) -> tuple:
    zeta = as_configuration(zeta)
    check_subset(zeta, bc.interior)
    return zeta


def local_energy(spec: OperatorSpec, zeta: Iterable[int], bc: BoundaryCondition, ambient: Sequence[int]) -> float:
    """``H_{L;D}(zeta; xi)`` at a single ambient."""
    zeta = _zeta(zeta, bc)
    if not zeta:
        return 0.0
    return -log_det(_reduce(spec, zeta, bc.boundary(ambient)))


def energy(spec: OperatorSpec, zeta: Iterable[int], bc: BoundaryCondition, ambient_schedule) -> ConvergenceTrace:
    """Energy over a nested ambient schedule; declared nondecreasing.

    The limit is the final value and ``last_increment`` exposes how far the
    truncation still moves it.
    """
    zeta = _zeta(zeta, bc)
    schedule = [as_window(w) for w in ambient_schedule]
    check_nested(schedule)
    values = tuple(local_energy(spec, zeta, bc, w) for w in schedule)
    return ConvergenceTrace(
        tuple(window_label(w) for w in schedule), tuple(len(w) for w in schedule), values, "increasing"
    )


def log_partition_function(spec: OperatorSpec, bc: BoundaryCondition, ambient: Sequence[int]) -> float:
    phi = phi_matrix(spec, bc, ambient)
    return log_det(KernelMatrix(phi.window, np.eye(len(phi)) + phi.entries))


def partition_function(spec: OperatorSpec, bc: BoundaryCondition, ambient: Sequence[int]) -> float:
    """``Z = det(I + Phi)``, the sum of ``det Phi(X, X)`` over all ``X`` in the interior."""
    return float(np.exp(log_partition_function(spec, bc, ambient)))


def specification_density(spec: OperatorSpec, zeta: Iterable[int], bc: BoundaryCondition,
                          ambient: Sequence[int]) -> float:
    """``det Phi(zeta, zeta) / det(I + Phi)``."""
    zeta = _zeta(zeta, bc)
    phi = phi_matrix(spec, bc, ambient)
    num = log_det(submatrix(phi, zeta)) if zeta else 0.0
    den = log_det(KernelMatrix(phi.window, np.eye(len(phi)) + phi.entries))
    return float(np.exp(num - den))


# ---------------------------------------------------------------------------
# DLR check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DlrRecord:
    window: object
    ambient: object
    x0: int
    xi_rule: object
    papangelou: float
    boltzmann: float
    residual: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _size_label(w: tuple):
    return w[-1] if w and w[0] == -w[-1] and len(w) == 2 * w[-1] + 1 else window_label(w)


def dlr_report(spec: OperatorSpec, x0: int, xi, window: Sequence[int], ambient_factor: int = 4) -> DlrRecord:
    """Papangelou intensity of the window model against the Boltzmann factor.

    ``xi`` is a SiteRule or an explicit configuration; in either case only
    its part inside the ambient is used.  The Boltzmann factor is
    ``exp(-H_{{x0}}({x0}; xi))`` with boundary ``xi & (ambient - {x0})``.

    The residual ``|alpha_[L] - exp(-H)| / max`` is assembled from the two
    Schur corrections (window model vs. boundary elimination) so that it is
    accurate far below the rounding level of the two values.
    """
    window = as_window(window)
    model = build_model(spec, window, ambient_factor)
    ambient = model.ambient
    if isinstance(xi, SiteRule):
        rule_repr = xi.to_dict()
        xi_all = xi.select(ambient, exclude=(x0,))
        if xi(x0):
            raise OverlappingSets(f"xi rule selects x0={x0}")
    else:
        rule_repr = list(as_configuration(xi))
        xi_all = tuple(s for s in as_configuration(xi) if s in set(ambient))
        if x0 in xi_all:
            raise OverlappingSets(f"x0={x0} belongs to xi")
    positions(window, [x0])
    inside = set(window)
    xi_in = tuple(s for s in xi_all if s in inside)
    xi_out = tuple(s for s in xi_all if s not in inside)

    sites = (x0, *xi_in)
    idx = model.index(sites)
    ix = np.ix_(idx, idx)
    base = model.a_window.entries[ix]
    d1 = model.correction[ix]
    if xi_out:
        cross = spec.block(list(xi_out), list(sites))
        chol = cholesky(spec.block(list(xi_out), list(xi_out)))
        half = la.solve_triangular(chol, cross, lower=True)
        d2 = half.T @ half
    else:
        d2 = np.zeros_like(base)
    e0 = np.zeros(len(sites))
    e0[0] = 1.0
    pap = 1.0 / np.linalg.solve(base - d1, e0)[0]
    boltz = 1.0 / np.linalg.solve(base - d2, e0)[0]
    diff = schur_gap(base, d1, d2)
    residual = abs(diff) / max(pap, boltz)
    return DlrRecord(_size_label(window), _size_label(ambient), int(x0), rule_repr,
                     float(pap), float(boltz), float(residual))


def dlr_residual(spec: OperatorSpec, x0: int, xi, window: Sequence[int], ambient_factor: int = 4) -> float:
    return dlr_report(spec, x0, xi, window, ambient_factor).residual


def boltzmann_factor(spec: OperatorSpec, x0: int, xi: Iterable[int], ambient: Sequence[int]) -> float:
    """``exp(-H_{{x0}}({x0}; xi))`` at one ambient, by direct Schur complement."""
    bc = BoundaryCondition((x0,), tuple(xi))
    return float(np.exp(-local_energy(spec, (x0,), bc, ambient)))


# ---------------------------------------------------------------------------
# uniqueness identity
# ---------------------------------------------------------------------------


def uniqueness_identity_check(model: DppWindowModel, lambda0: Sequence[int], X: Iterable[int]) -> float:
    """Relative difference of the two expressions for ``P(config & L0 = X)``.

    Left: ``det(I - K0) det(A_[L0](X, X))`` with ``A_[L0] = K0 (I - K0)^{-1}``.
    Right: determinant of the matrix taking rows in X from ``K0`` and rows in
    ``L0 - X`` from ``I - K0``.
    """
    lambda0 = as_window(lambda0)
    X = as_configuration(X)
    check_subset(X, lambda0)
    idx = model.index(lambda0)
    k0 = np.asarray(model.k_matrix)[np.ix_(idx, idx)]
    n = len(lambda0)
    imk = np.eye(n) - k0
    imk_mat = KernelMatrix(lambda0, imk)
    a0 = k0 @ imk_mat.solve(np.eye(n))
    a0 = KernelMatrix(lambda0, 0.5 * (a0 + a0.T))
    left = float(np.exp(log_det(imk_mat) + (log_det(submatrix(a0, X)) if X else 0.0)))
    rows = np.isin(np.asarray(lambda0), np.asarray(X, dtype=int))
    mixed = np.where(rows[:, None], k0, imk)
    right = float(np.linalg.det(mixed))
    return abs(left - right) / max(abs(left), abs(right), np.finfo(float).tiny)
