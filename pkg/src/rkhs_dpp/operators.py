"""Positive-definite operator families on the integer lattice.

Each family knows how to produce the matrix entries ``A(x, y)`` for any
block of sites.  Four families are supported:

* :class:`Diagonal` -- ``A = diag(alpha_x)`` with a positive rule.
* :class:`Toeplitz` -- banded convolution ``A(x, y) = c(|x - y|)``.
* :class:`ConjugatedDiagonal` -- ``A = C^T D C`` with ``C`` Toeplitz and
  ``D`` diagonal, evaluated exactly by summing over every intermediate site
  within band reach (so windows see the infinite operator, not a truncation).
* :class:`Explicit` -- a dense symmetric matrix on a fixed set of sites.

JSON schema (``to_dict`` / ``from_dict``)::

    {"family": "diagonal", "kind": "power", "k": 2, "scale": 1.0}
    {"family": "diagonal", "kind": "constant", "value": 1.0}
    {"family": "diagonal", "kind": "table", "values": {"0": 1.0, "1": 0.5}, "default": null}
    {"family": "toeplitz", "coeffs": [c0, c1, ...], "band": r, "tail_bound": 0.0}
    {"family": "conjugated", "c": <toeplitz>, "d": <diagonal>}
    {"family": "explicit", "sites": [...], "matrix": [[...], ...]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigParse, FamilyEvaluation, SiteNotInWindow


def _finite(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise FamilyEvaluation(f"{what} produced a non-finite value")
    return values


class OperatorSpec:
    """Base class.  Subclasses implement :meth:`block`."""

    family: str = ""

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        raise NotImplementedError

    def matrix(self, window: Sequence[int]) -> np.ndarray:
        return self.block(window, window)

    def entry(self, x: int, y: int) -> float:
        return float(self.block([x], [y])[0, 0])

    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @staticmethod
    def from_dict(d: dict) -> "OperatorSpec":
        return spec_from_dict(d)

    @staticmethod
    def from_json(text: str) -> "OperatorSpec":
        return spec_from_dict(json.loads(text))


@dataclass(frozen=True)
class Diagonal(OperatorSpec):
    """``A = diag(alpha_x)``.

    kind ``power``: ``alpha_x = scale * (1 + |x|)^(-k)``;
    kind ``constant``: ``alpha_x = value``;
    kind ``table``: explicit values per site, with an optional default for
    sites not listed.
    """

    kind: str = "constant"
    k: float = 0.0
    scale: float = 1.0
    value: float = 1.0
    values: tuple = ()  # sorted (site, value) pairs
    default: float | None = None

    family = "diagonal"

    def __post_init__(self):
        if self.kind not in ("power", "constant", "table"):
            raise ConfigParse(f"unknown diagonal kind {self.kind!r}")

    def diagonal(self, sites: Sequence[int]) -> np.ndarray:
        x = np.asarray(sites, dtype=float)
        if self.kind == "power":
            with np.errstate(all="ignore"):
                out = self.scale * (1.0 + np.abs(x)) ** (-float(self.k))
        elif self.kind == "constant":
            out = np.full(x.shape, float(self.value))
        else:
            table = dict(self.values)
            out = np.empty(x.shape)
            for i, s in enumerate(sites):
                v = table.get(int(s), self.default)
                if v is None:
                    raise FamilyEvaluation(f"diagonal table has no value for site {s}")
                out[i] = v
        _finite(out, "diagonal rule")
        if np.any(out <= 0):
            raise FamilyEvaluation("diagonal rule must be strictly positive")
        return out

    def block(self, rows, cols):
        rows = list(rows)
        cols = list(cols)
        out = np.zeros((len(rows), len(cols)))
        if not rows or not cols:
            return out
        col_index = {s: j for j, s in enumerate(cols)}
        shared = [(i, col_index[s]) for i, s in enumerate(rows) if s in col_index]
        if shared:
            ii, jj = map(list, zip(*shared))
            out[ii, jj] = self.diagonal([rows[i] for i in ii])
        return out

    def to_dict(self):
        d = {"family": "diagonal", "kind": self.kind}
        if self.kind == "power":
            d.update(k=self.k, scale=self.scale)
        elif self.kind == "constant":
            d["value"] = self.value
        else:
            d["values"] = {str(s): v for s, v in self.values}
            d["default"] = self.default
        return d


@dataclass(frozen=True)
class Toeplitz(OperatorSpec):
    """Symmetric banded Toeplitz operator, ``A(x, y) = coeffs[|x - y|]`` for ``|x - y| <= band``.

    ``tail_bound`` declares an upper bound on the absolute row-sum of the
    coefficients dropped beyond the band; it is metadata and never enters
    the arithmetic.
    """

    coeffs: tuple = (1.0,)
    band: int | None = None
    tail_bound: float = 0.0

    family = "toeplitz"

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if not c:
            raise ConfigParse("toeplitz needs at least one coefficient")
        object.__setattr__(self, "coeffs", c)
        band = len(c) - 1 if self.band is None else int(self.band)
        if band < 0:
            raise ConfigParse("toeplitz band must be >= 0")
        object.__setattr__(self, "band", band)
        _finite(np.asarray(c), "toeplitz coefficients")

    @property
    def reach(self) -> int:
        return min(self.band, len(self.coeffs) - 1)

    def coefficient(self, d) -> np.ndarray:
        d = np.abs(np.asarray(d, dtype=int))
        c = np.asarray(self.coeffs)
        r = self.reach
        return np.where(d <= r, c[np.minimum(d, r)], 0.0)

    def block(self, rows, cols):
        r = np.asarray(list(rows), dtype=int)
        c = np.asarray(list(cols), dtype=int)
        return self.coefficient(r[:, None] - c[None, :])

    def to_dict(self):
        return {
            "family": "toeplitz",
            "coeffs": list(self.coeffs),
            "band": self.band,
            "tail_bound": self.tail_bound,
        }


@dataclass(frozen=True)
class ConjugatedDiagonal(OperatorSpec):
    """``A = C^T D C`` with ``C`` a banded Toeplitz matrix and ``D`` diagonal.

    ``A(x, y) = sum_z C(z, x) * alpha_z * C(z, y)`` where ``z`` runs over
    every site within the band of both ``x`` and ``y``; since ``C`` is
    banded the sum is exact for the operator on all of Z.
    """

    c: Toeplitz = None
    d: Diagonal = None

    family = "conjugated"

    def __post_init__(self):
        if not isinstance(self.c, Toeplitz) or not isinstance(self.d, Diagonal):
            raise ConfigParse("conjugated family needs a toeplitz 'c' and a diagonal 'd'")

    def block(self, rows, cols):
        rows = np.asarray(list(rows), dtype=int)
        cols = np.asarray(list(cols), dtype=int)
        if rows.size == 0 or cols.size == 0:
            return np.zeros((rows.size, cols.size))
        r = self.c.reach
        lo = max(rows.min(), cols.min()) - r
        hi = min(rows.max(), cols.max()) + r
        if hi < lo:
            return np.zeros((rows.size, cols.size))
        z = np.arange(lo, hi + 1)
        c_rows = self.c.coefficient(z[:, None] - rows[None, :])
        c_cols = self.c.coefficient(z[:, None] - cols[None, :])
        alpha = self.d.diagonal(z)
        return c_rows.T @ (alpha[:, None] * c_cols)

    def to_dict(self):
        return {"family": "conjugated", "c": self.c.to_dict(), "d": self.d.to_dict()}


@dataclass(frozen=True, eq=False)
class Explicit(OperatorSpec):
    """Dense symmetric matrix given on a fixed list of sites."""

    sites: tuple = ()
    values: np.ndarray = None

    family = "explicit"

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        if len(set(sites)) != len(sites):
            raise ConfigParse("explicit sites must be distinct")
        m = np.array(self.values, dtype=float, copy=True)
        if m.shape != (len(sites), len(sites)):
            raise ConfigParse(f"explicit matrix shape {m.shape} does not match {len(sites)} sites")
        _finite(m, "explicit matrix")
        scale = max(np.abs(m).max(initial=0.0), 1.0)
        if np.abs(m - m.T).max(initial=0.0) > 1e-12 * scale:
            raise ConfigParse("explicit matrix must be symmetric")
        m.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "values", m)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(sites)})

    def block(self, rows, cols):
        try:
            ri = [self._index[s] for s in rows]
            ci = [self._index[s] for s in cols]
        except KeyError as exc:
            raise SiteNotInWindow(f"explicit operator has no site {exc.args[0]}") from None
        return self.values[np.ix_(ri, ci)].copy()

    def __eq__(self, other):
        return (
            isinstance(other, Explicit)
            and self.sites == other.sites
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def to_dict(self):
        return {"family": "explicit", "sites": list(self.sites), "matrix": self.values.tolist()}


def spec_from_dict(d: dict) -> OperatorSpec:
    """Inverse of ``OperatorSpec.to_dict``; raises ConfigParse on malformed input."""
    if not isinstance(d, dict):
        raise ConfigParse(f"operator spec must be a JSON object, got {type(d).__name__}")
    family = d.get("family")
    try:
        if family == "diagonal":
            kind = d.get("kind")
            if kind == "power":
                return Diagonal("power", k=float(d["k"]), scale=float(d.get("scale", 1.0)))
            if kind == "constant":
                return Diagonal("constant", value=float(d["value"]))
            if kind == "table":
                values = tuple(sorted((int(s), float(v)) for s, v in d["values"].items()))
                default = d.get("default")
                return Diagonal("table", values=values, default=None if default is None else float(default))
            raise ConfigParse(f"unknown diagonal kind {kind!r}")
        if family == "toeplitz":
            return Toeplitz(
                tuple(d["coeffs"]),
                band=d.get("band"),
                tail_bound=float(d.get("tail_bound", 0.0)),
            )
        if family == "conjugated":
            c = spec_from_dict({"family": "toeplitz", **d["c"]})
            dd = spec_from_dict({"family": "diagonal", **d["d"]})
            return ConjugatedDiagonal(c, dd)
        if family == "explicit":
            return Explicit(tuple(d["sites"]), np.asarray(d["matrix"], dtype=float))
    except (KeyError, TypeError) as exc:
        raise ConfigParse(f"malformed {family} spec: {exc!r}") from None
    raise ConfigParse(f"unknown operator family {family!r}")


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------


def identity() -> Diagonal:
    return Diagonal("constant", value=1.0)


def power_diagonal(k: float = 2, scale: float = 1.0) -> Diagonal:
    """``alpha_x = scale * (1 + |x|)^(-k)``: bounded, decreasing to zero."""
    return Diagonal("power", k=float(k), scale=float(scale))


def polynomial_decay_toeplitz(strength: float = 0.2, m: int = 6, band: int = 256) -> Toeplitz:
    """``c(0) = 1``, ``c(d) = strength / (1 + |d|^m)`` for ``1 <= |d| <= band``.

    With ``strength = 0.2`` and ``m = 6`` both the matrix and its inverse
    obey ``|C(x, y)| <= 1 / (1 + |x - y|^m)`` off the diagonal (see
    :func:`offdiagonal_decay_ratio`).
    """
    coeffs = [1.0] + [strength / (1.0 + d**m) for d in range(1, band + 1)]
    # sum over |d| > band of strength/d^m, both sides, by integral comparison
    tail = 2.0 * strength * band ** (1 - m) / (m - 1)
    return Toeplitz(tuple(coeffs), band=band, tail_bound=tail)


def conjugated_power_diagonal(k: float = 2, strength: float = 0.2, m: int = 6, band: int = 256) -> ConjugatedDiagonal:
    """``A = C^T D C`` with ``D = power_diagonal(k)`` and polynomially decaying ``C``."""
    return ConjugatedDiagonal(polynomial_decay_toeplitz(strength, m, band), power_diagonal(k))


def vanishing_symbol_toeplitz() -> Toeplitz:
    """``c(0) = 2, c(1) = 1``: symbol ``2 + 2 cos t`` vanishes at ``t = pi``."""
    return Toeplitz((2.0, 1.0))


def offdiagonal_decay_ratio(c: Toeplitz, m: int, size: int = 801) -> tuple[float, float]:
    """Largest ratio ``|T(d)| * (1 + |d|^m)`` over off-diagonal offsets, for T = C and C^{-1}.

    The inverse is taken on a finite section of ``size`` sites and read off
    its central row.  Both ratios must be <= 1 for the decay bound to hold.
    """
    half = size // 2
    sites = list(range(-half, half + 1))
    t = c.matrix(sites)
    row = np.linalg.solve(t, np.eye(len(sites))[:, half])
    d = np.abs(np.arange(-half, half + 1))
    off = d > 0
    weight = 1.0 + d[off].astype(float) ** m
    ratio_c = float(np.max(np.abs(t[half, off]) * weight))
    ratio_inv = float(np.max(np.abs(row[off]) * weight))
    return ratio_c, ratio_inv


def symbol_minimum(c: Toeplitz, samples: int = 4096) -> float:
    """Minimum over the circle of ``c0 + 2 sum_d c_d cos(d t)``; positive iff C > 0 on l^2(Z)."""
    t = np.linspace(0.0, math.pi, samples)
    coeffs = np.asarray(c.coeffs[: c.reach + 1])
    d = np.arange(1, coeffs.size)
    values = coeffs[0] + 2.0 * np.cos(np.outer(t, d)) @ coeffs[1:]
    return float(values.min())
