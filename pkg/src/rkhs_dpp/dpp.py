"""Determinantal point process of ``K = A (I + A)^{-1}`` on a finite window.

The kernel on a window ``L`` is taken from an ambient truncation
``D = enlarge(L, factor)``: ``K_L = (A_D (I + A_D)^{-1})_L``.  The local
interaction matrix ``A_[L] = K_L (I - K_L)^{-1}`` governs the window
marginals.  It is assembled from the exact block identity

    A_[L] = A_L - A(L, D-L) (I + A)(D-L, D-L)^{-1} A(D-L, L),

so the correction ``A_L - A_[L]`` is available directly, without
subtracting two nearly equal matrices.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as la

from .errors import InvariantViolation, SiteInConfiguration, SpectrumAtOne
from .kernel import (
    KernelMatrix,
    approx_B,
    cholesky,
    inverse,
    log_det,
    materialize,
    min_eig,
    schur_gap,
    schur_value,
    submatrix,
)
from .operators import OperatorSpec
from .traces import ConvergenceTrace, fmt
from .variational import alpha_trace
from .windows import SiteRule, as_configuration, as_window, check_nested, check_subset, enlarge, positions, window_label

SPECTRUM_GUARD = 1e-12
RNG_NAME = "numpy.random.Generator(Philox)"


@dataclass(frozen=True, eq=False)
class DppWindowModel:
    """Window marginals of the DPP, with the pieces needed to recombine them.

    Attributes
    ----------
    window, ambient : tuple of int
        The observation window and the truncation it was computed on.
    k_matrix : ndarray
        ``K_L``, computed from ``(I + A_D)^{-1}`` independently of ``a_bracket``.
    a_bracket : KernelMatrix
        ``A_[L]``.
    a_window : KernelMatrix
        ``A_L``.
    correction : ndarray
        ``A_L - A_[L]`` (positive semidefinite).
    """

    window: tuple
    ambient: tuple
    k_matrix: np.ndarray
    a_bracket: KernelMatrix
    a_window: KernelMatrix
    correction: np.ndarray

    def __len__(self):
        return len(self.window)

    def index(self, sites: Iterable[int]) -> list[int]:
        return positions(self.window, sites)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def model_from_matrices(window: Sequence[int], a_window: np.ndarray, correction: np.ndarray,
                        k_matrix: np.ndarray, ambient: Sequence[int] | None = None) -> DppWindowModel:
    """Assemble and validate a model from its blocks."""
    window = as_window(window)
    k = 0.5 * (k_matrix + k_matrix.T)
    top = float(np.linalg.eigvalsh(k)[-1]) if len(window) else 0.0
    if top >= 1.0 - SPECTRUM_GUARD:
        raise SpectrumAtOne(f"largest eigenvalue of K is {top!r}")
    a_l = KernelMatrix(window, a_window)
    a_br = KernelMatrix(window, a_l.entries - correction)
    model = DppWindowModel(
        window, tuple(ambient) if ambient is not None else window,
        _readonly(k), a_br, a_l, _readonly(0.5 * (correction + correction.T)),
    )
    check_model(model)
    return model


def check_model(model: DppWindowModel, rtol: float = 1e-10) -> float:
    """``|det(I - K) det(I + A_[L]) - 1|``; raises InvariantViolation past ``rtol``."""
    n = len(model)
    if n == 0:
        return 0.0
    ld_imk = log_det(KernelMatrix(model.window, np.eye(n) - model.k_matrix))
    ld_ipa = log_det(KernelMatrix(model.window, np.eye(n) + model.a_bracket.entries))
    err = abs(np.expm1(ld_imk + ld_ipa))
    if not err <= rtol:
        raise InvariantViolation("model_normalization", f"det(I-K) det(I+A_[L]) off by {err:.3e}")
    return float(err)


def build_model(spec: OperatorSpec, window: Sequence[int], ambient_factor: int = 4) -> DppWindowModel:
    """Model on ``window`` using the ambient ``enlarge(window, ambient_factor)``."""
    window = as_window(window)
    if not window:
        raise ValueError("window must be nonempty")
    ambient = enlarge(window, ambient_factor)
    check_subset(window, ambient)
    a_amb = materialize(spec, ambient)
    n = len(ambient)
    inner = positions(ambient, window)
    inner_set = set(window)
    outer = [i for i, s in enumerate(ambient) if s not in inner_set]

    # K_D = I - (I + A_D)^{-1}
    ipa = KernelMatrix(ambient, np.eye(n) + a_amb.entries)
    resolvent = ipa.solve(np.eye(n)[:, inner])[inner, :]
    k = np.eye(len(window)) - resolvent

    a_l = a_amb.entries[np.ix_(inner, inner)]
    if outer:
        cross = a_amb.entries[np.ix_(outer, inner)]
        ipa_out = ipa.entries[np.ix_(outer, outer)]
        chol = cholesky(ipa_out)
        half = la.solve_triangular(chol, cross, lower=True)
        correction = half.T @ half
    else:
        correction = np.zeros_like(a_l)
    return model_from_matrices(window, a_l, correction, k, ambient)


def ambient_discrepancy(spec: OperatorSpec, window: Sequence[int], factor: int, larger: int) -> float:
    """Max-norm change of ``K_L`` between two ambient factors."""
    k1 = build_model(spec, window, factor).k_matrix
    k2 = build_model(spec, window, larger).k_matrix
    return float(np.abs(k2 - k1).max())


def correlation(model: DppWindowModel, X: Iterable[int]) -> float:
    """``det K(X, X)``; 1 for the empty set."""
    idx = model.index(as_configuration(X))
    if not idx:
        return 1.0
    return float(np.linalg.det(model.k_matrix[np.ix_(idx, idx)]))


def log_marginal(model: DppWindowModel, xi: Iterable[int]) -> float:
    xi = as_configuration(xi)
    model.index(xi)
    n = len(model)
    ld = log_det(KernelMatrix(model.window, np.eye(n) - model.k_matrix))
    if xi:
        ld += log_det(submatrix(model.a_bracket, xi))
    return ld


def marginal(model: DppWindowModel, xi: Iterable[int]) -> float:
    """Probability that the configuration restricted to the window is exactly ``xi``."""
    return float(np.exp(log_marginal(model, xi)))


def _check_x0(model: DppWindowModel, x0: int, xi: tuple) -> None:
    model.index([x0, *xi])
    if x0 in xi:
        raise SiteInConfiguration(f"x0={x0} is already in the configuration")


def papangelou(model: DppWindowModel, x0: int, xi: Iterable[int]) -> float:
    """Conditional intensity at ``x0`` given ``xi`` inside the window.

    Schur complement of ``A_[L](x0 xi, x0 xi)`` onto x0.
    """
    xi = as_configuration(xi)
    _check_x0(model, x0, xi)
    return schur_value(submatrix(model.a_bracket, as_configuration((x0, *xi))), x0)


def _papangelou_blocks(model: DppWindowModel, x0: int, xi: tuple):
    sites = (x0, *xi)  # x0 first
    idx = model.index(sites)
    ix = np.ix_(idx, idx)
    return sites, model.a_window.entries[ix], model.correction[ix]


def papangelou_gap(model: DppWindowModel, x0: int, xi: Iterable[int]) -> float:
    """``alpha_L - alpha_[L]`` with ``alpha_L`` the same Schur complement taken on ``A_L``.

    Evaluated from the correction block, so it stays accurate when the gap
    is far below the rounding level of either term.
    """
    xi = as_configuration(xi)
    _check_x0(model, x0, xi)
    _, base, corr = _papangelou_blocks(model, x0, xi)
    return schur_gap(base, np.zeros_like(corr), corr)


@dataclass(frozen=True)
class PapangelouStudy:
    trace: ConvergenceTrace  # alpha_[L]
    companion: ConvergenceTrace  # alpha_L with R1 = xi
    gap: ConvergenceTrace  # alpha_L - alpha_[L]

    def bound_slack(self) -> float:
        """Smallest ``alpha_L - alpha_[L]`` over the schedule (should be >= 0)."""
        return float(min(self.gap.values))


def papangelou_trace(spec: OperatorSpec, x0: int, xi_rule: SiteRule, schedule,
                     ambient_factor: int = 4) -> PapangelouStudy:
    if xi_rule(x0):
        raise SiteInConfiguration(f"xi rule selects x0={x0}")
    schedule = [as_window(w) for w in schedule]
    check_nested(schedule)
    vals, gaps = [], []
    for w in schedule:
        model = build_model(spec, w, ambient_factor)
        xi = xi_rule.select(w)
        vals.append(papangelou(model, x0, xi))
        gaps.append(papangelou_gap(model, x0, xi))
    labels = tuple(window_label(w) for w in schedule)
    sizes = tuple(len(w) for w in schedule)
    companion = alpha_trace(spec, x0, xi_rule, schedule)
    return PapangelouStudy(
        ConvergenceTrace(labels, sizes, tuple(vals), "none"),
        companion,
        ConvergenceTrace(labels, sizes, tuple(gaps), "none"),
    )


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def _sample_block(k: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Chain-rule draws; ``u`` has shape (draws, n) and the result is a boolean mask."""
    draws, n = u.shape
    kk = np.broadcast_to(k, (draws, n, n)).copy()
    out = np.zeros((draws, n), dtype=bool)
    for i in range(n):
        p = kk[:, i, i]
        take = u[:, i] < p
        out[:, i] = take
        if i == n - 1:
            break
        # condition on inclusion (pivot K_ii) or exclusion (pivot K_ii - 1)
        pivot = np.where(take, p, p - 1.0)
        col = kk[:, i + 1:, i]
        kk[:, i + 1:, i + 1:] -= col[:, :, None] * col[:, None, :] / pivot[:, None, None]
    return out


def sample_many(model: DppWindowModel, n: int, seed: int, chunk: int = 20000) -> list[tuple]:
    """``n`` independent exact draws from one seeded stream."""
    rng = make_rng(seed)
    sites = np.asarray(model.window)
    out: list[tuple] = []
    k = np.asarray(model.k_matrix)
    chunk = max(1, min(chunk, 2_000_000 // max(len(sites) ** 2, 1)))
    while len(out) < n:
        m = min(chunk, n - len(out))
        u = rng.random((m, len(sites)))
        mask = _sample_block(k, u)
        out.extend(tuple(int(s) for s in sites[row]) for row in mask)
    return out


def sample(model: DppWindowModel, seed: int) -> tuple:
    """One exact draw, deterministic in ``seed``."""
    return sample_many(model, 1, seed)[0]


def samples_to_jsonl(samples: Sequence[tuple], seed: int) -> str:
    return "".join(json.dumps({"seed": int(seed), "sites": list(s)}) + "\n" for s in samples)


def configurations(window: Sequence[int]):
    """All subsets of ``window`` in order of increasing size, then lexicographic."""
    for r in range(len(window) + 1):
        yield from combinations(window, r)


def config_label(config: Sequence[int]) -> str:
    return ";".join(str(s) for s in config)


def probability_table_csv(rows: Iterable[tuple[Sequence[int], float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["config", "probability"])
    for config, p in rows:
        w.writerow([config_label(config), fmt(p)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# operator inequalities
# ---------------------------------------------------------------------------


def check_lemma43(spec: OperatorSpec, window: Sequence[int], ambient_factor: int = 4) -> tuple[float, float]:
    """Min eigenvalues of ``A_L - A_[L]`` and ``B_hat_L - B_[L]``.

    ``B_hat_L`` is the last point of :func:`approx_B` over the model ambient
    and its double, ``B_[L] = A_[L]^{-1}``.  Both should be >= 0.
    """
    model = build_model(spec, window, ambient_factor)
    first = min_eig(model.a_window.entries - model.a_bracket.entries)
    amb = [model.ambient, enlarge(model.window, 2 * ambient_factor)]
    if set(amb[1]) == set(amb[0]):
        amb = amb[:1]
    b_hat = approx_B(spec, model.window, amb).final
    second = min_eig(b_hat.entries - inverse(model.a_bracket).entries)
    return first, second
