"""Finite windows and configurations on the integer lattice.

A window is a strictly increasing tuple of integer sites.  Configurations
(point-process realizations) use the same representation, so a
configuration is simply a window that lives inside a host window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ConfigParse, ScheduleNotNested, SiteNotInWindow

Window = tuple  # tuple[int, ...], strictly increasing


def as_window(sites: Iterable[int]) -> tuple[int, ...]:
    """Validate and normalize ``sites`` into a window.

    Input must already be strictly increasing; duplicates or disorder are
    rejected rather than silently sorted, since callers index matrices by
    position.
    """
    out = tuple(int(s) for s in sites)
    for a, b in zip(out, out[1:]):
        if b <= a:
            raise ValueError(f"window sites must be strictly increasing, got {a} then {b}")
    return out


def as_configuration(sites: Iterable[int]) -> tuple[int, ...]:
    """Sort and deduplicate-check a set of sites."""
    out = tuple(sorted(int(s) for s in sites))
    if len(set(out)) != len(out):
        raise ValueError("configuration contains duplicate sites")
    return out


def interval(lo: int, hi: int) -> tuple[int, ...]:
    return tuple(range(int(lo), int(hi) + 1))


def symmetric(n: int) -> tuple[int, ...]:
    """The window {-n, ..., n}."""
    return interval(-n, n)


def positions(window: Sequence[int], sites: Iterable[int]) -> list[int]:
    """Indices of ``sites`` inside ``window``; raises SiteNotInWindow."""
    index = {s: i for i, s in enumerate(window)}
    try:
        return [index[s] for s in sites]
    except KeyError as exc:
        raise SiteNotInWindow(f"site {exc.args[0]} is not in the window") from None


def check_subset(sub: Iterable[int], window: Sequence[int]) -> None:
    host = set(window)
    for s in sub:
        if s not in host:
            raise SiteNotInWindow(f"site {s} is not in the window")


def is_interval(window: Sequence[int]) -> bool:
    return len(window) > 0 and window[-1] - window[0] + 1 == len(window)


def enlarge(window: Sequence[int], factor: int) -> tuple[int, ...]:
    """Ambient interval obtained by scaling the window's half-width by ``factor``.

    ``{-n..n}`` maps to ``{-factor*n .. factor*n}``.  Factor 1 returns the
    interval hull of the window.  A single-site window is given half-width 1
    so that factors above 1 still enlarge it.
    """
    if factor < 1:
        raise ValueError("ambient factor must be >= 1")
    if not window:
        raise ValueError("cannot enlarge an empty window")
    lo, hi = window[0], window[-1]
    half = max(math.ceil((hi - lo) / 2), 1)
    pad = (factor - 1) * half
    return interval(lo - pad, hi + pad)


def doubling_schedule(n_start: int, n_max: int) -> list[tuple[int, ...]]:
    """Symmetric windows {-n..n} with n = n_start, 2*n_start, ... <= n_max.

    ``n_start = 0`` yields {0} first and then continues from n = 1.
    """
    if n_start < 0 or n_max < n_start:
        raise ValueError("need 0 <= n_start <= n_max")
    ns = []
    n = n_start
    while n <= n_max:
        ns.append(n)
        n = 1 if n == 0 else 2 * n
    return [symmetric(n) for n in ns]


def linear_schedule(n_start: int, n_max: int, step: int = 1) -> list[tuple[int, ...]]:
    if step < 1 or n_start < 0 or n_max < n_start:
        raise ValueError("need step >= 1 and 0 <= n_start <= n_max")
    return [symmetric(n) for n in range(n_start, n_max + 1, step)]


def check_nested(schedule: Sequence[Sequence[int]]) -> None:
    """Each window must strictly contain its predecessor."""
    if not schedule:
        raise ScheduleNotNested("schedule is empty")
    for prev, cur in zip(schedule, schedule[1:]):
        p, c = set(prev), set(cur)
        if not p < c:
            raise ScheduleNotNested(
                f"window {window_label(cur)} does not strictly contain {window_label(prev)}"
            )


def window_label(window: Sequence[int]) -> str:
    if not window:
        return "empty"
    if is_interval(window):
        if window[0] == -window[-1]:
            return f"n={window[-1]}"
        return f"{window[0]}..{window[-1]}"
    return f"{window[0]}..{window[-1]}/{len(window)}"


@dataclass(frozen=True)
class SiteRule:
    """Serializable predicate on sites, used for partitions and boundary configurations.

    Kinds: ``all``, ``none``, ``odd``, ``even``, ``nonnegative``, ``negative``,
    ``modulo`` (``modulus``, ``residue``), ``sites`` (explicit list) and
    ``not`` (negation of ``inner``).
    """

    kind: str
    modulus: int = 2
    residue: int = 0
    sites: tuple = ()
    inner: "SiteRule | None" = field(default=None, compare=True)

    _KINDS = ("all", "none", "odd", "even", "nonnegative", "negative", "modulo", "sites", "not")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ConfigParse(f"unknown site rule kind {self.kind!r}")
        if self.kind == "modulo" and self.modulus < 1:
            raise ConfigParse("modulo rule needs modulus >= 1")
        if self.kind == "not" and self.inner is None:
            raise ConfigParse("'not' rule needs an inner rule")

    def __call__(self, x: int) -> bool:
        k = self.kind
        if k == "all":
            return True
        if k == "none":
            return False
        if k == "odd":
            return x % 2 == 1
        if k == "even":
            return x % 2 == 0
        if k == "nonnegative":
            return x >= 0
        if k == "negative":
            return x < 0
        if k == "modulo":
            return x % self.modulus == self.residue % self.modulus
        if k == "sites":
            return x in self.sites
        return not self.inner(x)

    def complement(self) -> "SiteRule":
        if self.kind == "not":
            return self.inner
        return SiteRule("not", inner=self)

    def select(self, window: Iterable[int], exclude: Iterable[int] = ()) -> tuple[int, ...]:
        """Sites of ``window`` satisfying the rule, minus ``exclude``."""
        skip = set(exclude)
        return tuple(s for s in window if s not in skip and self(s))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "modulo":
            d.update(modulus=self.modulus, residue=self.residue)
        elif self.kind == "sites":
            d["sites"] = list(self.sites)
        elif self.kind == "not":
            d["inner"] = self.inner.to_dict()
        return d

    @classmethod
    def from_dict(cls, d) -> "SiteRule":
        if isinstance(d, str):
            return cls(d)
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigParse(f"site rule must be a string or an object with 'kind', got {d!r}")
        kind = d["kind"]
        if kind == "modulo":
            return cls(kind, modulus=int(d["modulus"]), residue=int(d.get("residue", 0)))
        if kind == "sites":
            return cls(kind, sites=tuple(int(s) for s in d["sites"]))
        if kind == "not":
            return cls(kind, inner=cls.from_dict(d["inner"]))
        return cls(kind)
