"""Countable domain Z ∪ {*^n}, its canonical indexing, and a decidable support algebra.

Canonical indexing: the marker ``*^n`` sits at odd index ``2n - 1``; integers
occupy the even indices in the order ``0, +1, -1, +2, -2, ...`` so that
``0 -> 2``, ``1 -> 4``, ``-1 -> 6``, ``2 -> 8`` and so on.  Bit ``k`` of every
row mask produced here corresponds to canonical index ``k`` (bit 0 is unused).
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Union


@dataclass(frozen=True, slots=True)
class IntPoint:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True, slots=True)
class Marker:
    level: int

    def __post_init__(self):
        if self.level < 1:
            raise ValueError(f"marker level must be >= 1, got {self.level}")

    def __str__(self) -> str:
        return f"*^{self.level}"


Element = Union[IntPoint, Marker]


def parse_element(text: str) -> Element:
    text = text.strip()
    if text.startswith("*^"):
        return Marker(int(text[2:]))
    return IntPoint(int(text))


def int_index(v: int) -> int:
    if v == 0:
        return 2
    if v > 0:
        return 4 * v
    return 4 * (-v) + 2


def canonical_index(e: Element) -> int:
    if isinstance(e, Marker):
        return 2 * e.level - 1
    return int_index(e.value)


def deindex(k: int) -> Element:
    if k < 1:
        raise ValueError(f"canonical indices start at 1, got {k}")
    if k % 2:
        return Marker((k + 1) // 2)
    p = k // 2 - 1
    if p == 0:
        return IntPoint(0)
    if p % 2:
        return IntPoint((p + 1) // 2)
    return IntPoint(-(p // 2))


# ---------------------------------------------------------------------------
# bit patterns

@lru_cache(maxsize=None)
def _byte_pattern(step: int, residue: int) -> int:
    byte = 0
    for b in range(8):
        if b % step == residue:
            byte |= 1 << b
    return byte


_PATTERNS: dict[tuple[int, int], tuple[int, int]] = {}


def _pattern(step: int, residue: int, nbits: int) -> int:
    """Bits at every position p < nbits with p % step == residue (step in {2, 4})."""
    key = (step, residue)
    have = _PATTERNS.get(key)
    if have is None or have[0] < nbits:
        size = max(nbits, 2 * have[0] if have else 1024)
        nbytes = size // 8 + 1
        pat = int.from_bytes(bytes([_byte_pattern(step, residue)]) * nbytes, "little")
        have = (nbytes * 8, pat)
        _PATTERNS[key] = have
    return have[1] & ((1 << nbits) - 1)


def progression_mask(start: int, step: int, end: int) -> int:
    """Bits start, start+step, ... up to and including ``end``."""
    if start > end:
        return 0
    pat = _pattern(step, start % step, end + 1)
    return pat >> start << start


# ---------------------------------------------------------------------------
# support algebra

@dataclass(frozen=True, slots=True)
class Ray:
    """Either all integers ``> bound`` (kind ``gt``) or all integers ``< bound`` (kind ``lt``)."""

    kind: str
    bound: int

    def __post_init__(self):
        if self.kind not in ("gt", "lt"):
            raise ValueError(f"unknown ray kind {self.kind!r}")

    @classmethod
    def gt(cls, j: int) -> "Ray":
        return cls("gt", j)

    @classmethod
    def lt(cls, b: int) -> "Ray":
        return cls("lt", b)

    @classmethod
    def nonneg(cls) -> "Ray":
        return cls("gt", -1)

    @classmethod
    def nonpos(cls) -> "Ray":
        return cls("lt", 1)

    @classmethod
    def positive(cls) -> "Ray":
        return cls("gt", 0)

    def __contains__(self, v: int) -> bool:
        return v > self.bound if self.kind == "gt" else v < self.bound

    def mask(self, M: int) -> int:
        j = self.bound
        out = 0
        if self.kind == "gt":
            lo = max(1, j + 1)
            out |= progression_mask(4 * lo, 4, M)
            if j < 0:
                if M >= 2:
                    out |= 1 << 2
                if -j - 1 >= 1:
                    out |= progression_mask(6, 4, min(M, 4 * (-j - 1) + 2))
        else:
            lo = max(1, 1 - j)
            out |= progression_mask(4 * lo + 2, 4, M)
            if j > 0:
                if M >= 2:
                    out |= 1 << 2
                if j - 1 >= 1:
                    out |= progression_mask(4, 4, min(M, 4 * (j - 1)))
        return out

    def __str__(self) -> str:
        return f"{{x > {self.bound}}}" if self.kind == "gt" else f"{{x < {self.bound}}}"


class NotUUSError(ValueError):
    """Raised when a support description would be finite."""


@dataclass(frozen=True)
class SupportSpec:
    finite_in: frozenset = frozenset()
    finite_out: frozenset = frozenset()
    rays: frozenset = frozenset()
    marker_prefix: int = 0
    all_markers: bool = False
    _in_idx: frozenset = field(init=False, repr=False, compare=False)
    _out_idx: frozenset = field(init=False, repr=False, compare=False)
    _sorted_idx: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("finite_in", "finite_out", "rays"):
            val = getattr(self, name)
            if not isinstance(val, frozenset):
                object.__setattr__(self, name, frozenset(val))
        if self.finite_in & self.finite_out:
            raise ValueError("finite_in and finite_out overlap")
        if self.marker_prefix < 0:
            raise ValueError("marker_prefix must be nonnegative")
        if not self.rays and not self.all_markers:
            raise NotUUSError("support would be finite: need a ray or all markers")
        object.__setattr__(self, "_in_idx", frozenset(canonical_index(e) for e in self.finite_in))
        object.__setattr__(self, "_out_idx", frozenset(canonical_index(e) for e in self.finite_out))
        object.__setattr__(self, "_sorted_idx", (sorted(self._in_idx), sorted(self._out_idx)))

    def _base(self, e: Element) -> bool:
        if isinstance(e, Marker):
            return self.all_markers or e.level <= self.marker_prefix
        return any(e.value in r for r in self.rays)

    def contains(self, e: Element) -> bool:
        if e in self.finite_in:
            return True
        return self._base(e) and e not in self.finite_out

    def contains_index(self, k: int) -> bool:
        if k in self._in_idx:
            return True
        if k in self._out_idx:
            return False
        return self._base(deindex(k))

    def row_bits(self, M: int, lo: int = 1) -> int:
        """Membership of canonical indices lo..M as a bit mask."""
        out = 0
        if self.all_markers:
            out |= progression_mask(1, 2, M)
        elif self.marker_prefix:
            out |= progression_mask(1, 2, min(M, 2 * self.marker_prefix - 1))
        for r in self.rays:
            out |= r.mask(M)
        if lo > 1:
            out = out >> lo << lo
        ins, outs = self._sorted_idx
        for k in ins[bisect_left(ins, lo):bisect_right(ins, M)]:
            out |= 1 << k
        for k in outs[bisect_left(outs, lo):bisect_right(outs, M)]:
            out &= ~(1 << k)
        return out

    def tails(self) -> frozenset:
        """Which infinite families the set contains cofinitely: '+', '-', '*'."""
        t = set()
        for r in self.rays:
            t.add("+" if r.kind == "gt" else "-")
        if self.all_markers:
            t.add("*")
        return frozenset(t)

    def int_breakpoints(self) -> set:
        pts = {e.value for e in self.finite_in | self.finite_out if isinstance(e, IntPoint)}
        pts |= {r.bound for r in self.rays}
        return pts

    def marker_breakpoints(self) -> set:
        pts = {e.level for e in self.finite_in | self.finite_out if isinstance(e, Marker)}
        pts.add(self.marker_prefix)
        return pts

    def describe(self) -> str:
        parts = [str(r) for r in sorted(self.rays, key=lambda r: (r.kind, r.bound))]
        if self.all_markers:
            parts.append("{*^n}")
        elif self.marker_prefix:
            parts.append(f"{{*^1..*^{self.marker_prefix}}}")
        if self.finite_in:
            parts.append("{" + ", ".join(sorted(map(str, self.finite_in))) + "}")
        s = " ∪ ".join(parts)
        if self.finite_out:
            s += " ∖ {" + ", ".join(sorted(map(str, self.finite_out))) + "}"
        return s


@dataclass(frozen=True)
class Hypothesis:
    name: str
    spec: SupportSpec

    def contains(self, e: Element) -> bool:
        return self.spec.contains(e)

    def contains_index(self, k: int) -> bool:
        return self.spec.contains_index(k)

    def row_bits(self, M: int, lo: int = 1) -> int:
        return self.spec.row_bits(M, lo)

    def __str__(self) -> str:
        return self.name


def contains(h, e: Element) -> bool:
    return h.contains(e)


def support_prefix(h, m: int) -> frozenset:
    """supp(h) restricted to the first m canonical indices."""
    if m < 1:
        raise ValueError(f"prefix length must be >= 1, got {m}")
    return frozenset(deindex(k) for k in range(1, m + 1) if h.contains_index(k))


def iter_support(h) -> Iterator[Element]:
    k = 1
    while True:
        if h.contains_index(k):
            yield deindex(k)
        k += 1


def enumerate_support(h, k: int) -> list:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    out = []
    for e in iter_support(h):
        out.append(e)
        if len(out) == k:
            return out
    return out  # pragma: no cover - iter_support is infinite


def _probe_points(crit: Iterable[int], floor: int | None = None) -> set:
    crit = set(crit)
    if not crit:
        crit = {floor if floor is not None else 0}
    pts = set()
    for c in crit:
        pts.update((c - 1, c, c + 1))
    pts.add(max(crit) + 2)
    if floor is not None:
        pts = {p for p in pts if p >= floor}
        pts.add(floor)
    else:
        pts.add(min(crit) - 2)
    return pts


def _spec_of(h) -> SupportSpec:
    return h.spec if isinstance(h, Hypothesis) else h


def subset_query(a, b) -> bool:
    """Decide supp(a) ⊆ supp(b) without search.

    Membership of either spec is constant between consecutive breakpoints
    (finite points and ray bounds), so probing each breakpoint, its
    neighbours, and one point past each end covers every integer; markers
    are handled the same way on levels >= 1.
    """
    a, b = _spec_of(a), _spec_of(b)
    if not a.tails() <= b.tails():
        return False
    ints = _probe_points(a.int_breakpoints() | b.int_breakpoints())
    for v in ints:
        e = IntPoint(v)
        if a.contains(e) and not b.contains(e):
            return False
    levels = _probe_points(a.marker_breakpoints() | b.marker_breakpoints(), floor=1)
    for n in levels:
        e = Marker(n)
        if a.contains(e) and not b.contains(e):
            return False
    return True


def intersection_is_infinite(specs: Iterable) -> bool:
    specs = [_spec_of(s) for s in specs]
    if not specs:
        return True
    common = specs[0].tails()
    for s in specs[1:]:
        common &= s.tails()
    return bool(common)
