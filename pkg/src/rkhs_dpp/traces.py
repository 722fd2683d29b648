"""Convergence traces: values indexed by a growing sequence of windows."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Any

import numpy as np

DIRECTIONS = ("decreasing", "increasing", "none")


def fmt(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


def _as_array(v: Any) -> np.ndarray:
    entries = getattr(v, "entries", None)
    return np.asarray(entries if entries is not None else v, dtype=float)


@dataclass(frozen=True)
class ConvergenceTrace:
    """Raw values over a window schedule, plus the direction theory predicts.

    ``values`` holds floats for scalar traces and KernelMatrix objects for
    matrix traces.  Monotonicity and convergence are judged on demand and
    never applied to the stored values.
    """

    labels: tuple
    n_sites: tuple
    values: tuple
    monotone_dir: str = "none"

    def __post_init__(self):
        if self.monotone_dir not in DIRECTIONS:
            raise ValueError(f"monotone_dir must be one of {DIRECTIONS}")
        if not len(self.labels) == len(self.n_sites) == len(self.values):
            raise ValueError("labels, n_sites and values must have equal length")

    def __len__(self):
        return len(self.values)

    @property
    def points(self) -> list[tuple]:
        return list(zip(self.labels, self.values))

    @property
    def final(self):
        return self.values[-1]

    @property
    def is_scalar(self) -> bool:
        return all(np.ndim(_as_array(v)) == 0 for v in self.values)

    def increments(self) -> np.ndarray:
        """Signed successive differences (scalar traces only)."""
        v = np.asarray([float(x) for x in self.values])
        return np.diff(v)

    @property
    def last_increment(self) -> float:
        inc = self.increments()
        return float(inc[-1]) if inc.size else 0.0

    def max_norm_steps(self) -> np.ndarray:
        """Max-norm of successive differences; works for matrix and scalar traces."""
        arrs = [_as_array(v) for v in self.values]
        return np.asarray([np.abs(b - a).max(initial=0.0) for a, b in zip(arrs, arrs[1:])])

    def monotone_slack(self) -> float:
        """Worst violation of the declared direction (<= 0 means violated by that much).

        Scalar traces use signed increments; matrix traces use the minimum
        eigenvalue of successive differences.  Returns +inf when nothing
        is declared or there is a single point.
        """
        if self.monotone_dir == "none" or len(self) < 2:
            return float("inf")
        sign = 1.0 if self.monotone_dir == "increasing" else -1.0
        if self.is_scalar:
            return float((sign * self.increments()).min())
        worst = float("inf")
        arrs = [_as_array(v) for v in self.values]
        for a, b in zip(arrs, arrs[1:]):
            d = sign * (b - a)
            worst = min(worst, float(np.linalg.eigvalsh(0.5 * (d + d.T))[0]))
        return worst

    def is_monotone(self, rtol: float = 1e-12, atol: float = 0.0) -> bool:
        """Declared direction holds up to ``rtol * scale + atol``."""
        scale = max(float(np.abs(_as_array(v)).max(initial=0.0)) for v in self.values)
        return self.monotone_slack() >= -(rtol * scale + atol)

    def converged(self, rel_tol: float = 1e-8) -> bool:
        """Last two steps are both below ``rel_tol`` relative to the final max-norm."""
        if len(self) < 3:
            return False
        steps = self.max_norm_steps()
        scale = max(float(np.abs(_as_array(self.final)).max(initial=0.0)), 1.0)
        return bool(np.all(steps[-2:] < rel_tol * scale))

    def to_csv(self, path=None) -> str:
        """Columns ``window_label,n_sites,value,delta``; returns the text, writes it if ``path`` given."""
        if not self.is_scalar:
            raise TypeError("only scalar traces serialize to CSV")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["window_label", "n_sites", "value", "delta"])
        prev = None
        for label, n, v in zip(self.labels, self.n_sites, self.values):
            w.writerow([label, n, fmt(v), "" if prev is None else fmt(float(v) - prev)])
            prev = float(v)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as f:
                f.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str, monotone_dir: str = "none") -> "ConvergenceTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            labels=tuple(r["window_label"] for r in rows),
            n_sites=tuple(int(r["n_sites"]) for r in rows),
            values=tuple(float(r["value"]) for r in rows),
            monotone_dir=monotone_dir,
        )
