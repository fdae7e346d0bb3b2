"""Hypothesis classes used by the experiments, plus seeded generic families."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

from .domain import (
    Hypothesis,
    IntPoint,
    Marker,
    Ray,
    SupportSpec,
    intersection_is_infinite,
)


@dataclass(frozen=True)
class FiniteClass:
    members: tuple
    description: str
    class_id: str = "finite"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        names = [h.name for h in self.members]
        if len(set(names)) != len(names):
            raise ValueError("finite class member names must be distinct")

    @property
    def size(self) -> Optional[int]:
        return len(self.members)

    def get(self, i: int):
        if not 1 <= i <= len(self.members):
            raise IndexError(f"class has no hypothesis at index {i}")
        return self.members[i - 1]

    def has_index(self, i: int) -> bool:
        return 1 <= i <= len(self.members)

    def index_of(self, h) -> int:
        return self.members.index(h) + 1

    def descriptor(self) -> dict:
        return {"id": self.class_id, "params": dict(self.params)}


class CountableClass:
    """Countable class given by a pure constructor ``index -> Hypothesis`` (1-based)."""

    size = None

    def __init__(self, constructor: Callable[[int], Hypothesis], description: str,
                 class_id: str, params: dict | None = None):
        self._constructor = lru_cache(maxsize=None)(constructor)
        self.description = description
        self.class_id = class_id
        self.params = dict(params or {})

    def get(self, i: int) -> Hypothesis:
        if i < 1:
            raise IndexError(f"class has no hypothesis at index {i}")
        return self._constructor(i)

    def has_index(self, i: int) -> bool:
        return i >= 1

    def descriptor(self) -> dict:
        return {"id": self.class_id, "params": dict(self.params)}


@dataclass(frozen=True)
class Fixed:
    hypothesis: object


@dataclass(frozen=True)
class PostHoc:
    resolver: Callable


# ---------------------------------------------------------------------------
# classes from the separation constructions

def h_infinity() -> Hypothesis:
    return Hypothesis("h_inf", SupportSpec(rays={Ray.positive()}))


def h_n(n: int) -> Hypothesis:
    # {1..n} ∪ Z_{<0} written as {x < n+1} ∖ {0}
    return Hypothesis(f"h_{n}", SupportSpec(finite_out={IntPoint(0)}, rays={Ray.lt(n + 1)}))


def make_nonuniform_hard_class() -> CountableClass:
    """Index 1 is h_inf (supp = positive integers); index n+1 is h_n = {1..n} ∪ Z_{<0}."""
    def build(i):
        return h_infinity() if i == 1 else h_n(i - 1)
    return CountableClass(build, "{h_inf} ∪ {h_n : n >= 1}", "nonuniform-hard")


def h_minus(i: int) -> Hypothesis:
    return Hypothesis(f"h{i}-", SupportSpec(finite_in={IntPoint(i)}, rays={Ray.nonpos()}))


def h_plus(i: int) -> Hypothesis:
    return Hypothesis(f"h{i}+", SupportSpec(finite_in={IntPoint(-i)}, rays={Ray.nonneg()}))


def make_proper_replay_class() -> FiniteClass:
    members = (h_minus(1), h_minus(2), h_plus(1), h_plus(2))
    return FiniteClass(members, "{h1-, h2-, h1+, h2+}", "proper-replay")


def make_proper_replay_countable() -> CountableClass:
    """h1-, h2-, then h_k+ = Z_{>=0} ∪ {-k} for k = 1, 2, ... at index k + 2."""
    def build(i):
        if i <= 2:
            return h_minus(i)
        return h_plus(i - 2)
    return CountableClass(build, "{h1-, h2-} ∪ {h_k+ : k >= 1}", "proper-replay-countable")


def marker_hypothesis() -> Hypothesis:
    return Hypothesis("h_mk", SupportSpec(all_markers=True))


def make_separation_hypothesis(b: int, kind: int, A=(), j: Optional[int] = None) -> Hypothesis:
    """Member of the padded class at level b, with markers *^1..*^b added.

    kind 1: {b} ∪ A ∪ {x > j} with j > b.  kind 2: {x < b} ∪ A with b not in A.
    Points of A already covered by the rest of the support are dropped.
    """
    if b < 0:
        raise ValueError("b must be nonnegative")
    A = {int(a) for a in A}
    if kind == 1:
        if j is None or j <= b:
            raise ValueError(f"kind 1 needs j > b (b={b}, j={j})")
        pts = {a for a in A if a <= j and a != b} | {b}
        spec = SupportSpec(finite_in={IntPoint(a) for a in pts}, rays={Ray.gt(j)}, marker_prefix=b)
        name = f"H1[b={b},j={j},A={sorted(pts - {b})}]"
    elif kind == 2:
        if b in A:
            raise ValueError("kind 2 needs b outside A")
        pts = {a for a in A if a >= b}
        spec = SupportSpec(finite_in={IntPoint(a) for a in pts}, rays={Ray.lt(b)}, marker_prefix=b)
        name = f"H2[b={b},A={sorted(pts)}]"
    else:
        raise ValueError(f"kind must be 1 or 2, got {kind}")
    return Hypothesis(name, spec)


def marker_level(h: Hypothesis) -> Optional[int]:
    """Largest k with *^k in supp(h), or None when there are infinitely many."""
    spec = h.spec
    if spec.all_markers:
        return None
    levels = [spec.marker_prefix] + [e.level for e in spec.finite_in if isinstance(e, Marker)]
    return max(levels)


def sample_separation_hypotheses(count: int, seed: int) -> list:
    rng = random.Random(f"separation:{seed}")
    out = []
    for _ in range(count):
        b = rng.randint(0, 6)
        kind = rng.choice((1, 2))
        if kind == 1:
            j = b + rng.randint(1, 12)
            A = rng.sample(range(-15, j + 1), rng.randint(0, 5))
            out.append(make_separation_hypothesis(b, 1, A, j))
        else:
            A = [a for a in rng.sample(range(b - 5, b + 25), rng.randint(0, 5)) if a != b]
            out.append(make_separation_hypothesis(b, 2, A))
    return out


def make_separation_sample(count: int, seed: int) -> FiniteClass:
    """The all-marker hypothesis followed by ``count`` sampled padded hypotheses."""
    members = (marker_hypothesis(),) + tuple(sample_separation_hypotheses(count, seed))
    return FiniteClass(members, f"marker hypothesis + {count} sampled padded hypotheses",
                       "separation", {"count": count, "seed": seed})


class AdaptiveClass:
    """Stand-in for a class that an adversary builds while the game runs."""

    size = None
    class_id = "diagonal"
    description = "built online by the diagonal adversary"
    params: dict = {}

    def get(self, i: int):
        raise LookupError("hypotheses of the adaptive class exist only inside a running game")

    def has_index(self, i: int) -> bool:
        return i >= 1

    def descriptor(self) -> dict:
        return {"id": self.class_id, "params": {}}


# ---------------------------------------------------------------------------
# generic countable families

GENERIC_RANGE = (-20, 20)
GENERIC_MAX_FINITE = 6


def generic_member(seed: int, i: int) -> Hypothesis:
    rng = random.Random(f"generic:{seed}:{i}")
    size = rng.randint(0, min(i, GENERIC_MAX_FINITE))
    pts = rng.sample(range(GENERIC_RANGE[0], GENERIC_RANGE[1] + 1), size)
    kind = rng.choice(("gt", "lt"))
    bound = rng.randint(-8, 8)
    spec = SupportSpec(finite_in={IntPoint(p) for p in pts}, rays={Ray(kind, bound)})
    return Hypothesis(f"g{seed}_{i}", spec)


def make_generic_countable(seed: int) -> CountableClass:
    """Seeded family: hypothesis i = (up to min(i, 6) seeded points in [-20, 20]) ∪ one seeded ray."""
    return CountableClass(lambda i: generic_member(seed, i),
                          f"generic countable family (seed {seed})", "generic", {"seed": seed})


def make_uniform_countable_class() -> CountableClass:
    """h_k = Z_{>0} ∪ {-k}: every member contains the core Z_{>0}."""
    def build(k):
        return Hypothesis(f"c_{k}", SupportSpec(finite_in={IntPoint(-k)}, rays={Ray.positive()}))
    return CountableClass(build, "{Z_{>0} ∪ {-k} : k >= 1}", "uniform-countable")


UNIFORM_COUNTABLE_CORE = SupportSpec(rays={Ray.positive()})


# ---------------------------------------------------------------------------
# finite classes with known uniform sample complexity

def _nested_rays() -> FiniteClass:
    members = tuple(Hypothesis(f"r>{k}", SupportSpec(rays={Ray.gt(k)})) for k in (0, 2, 5))
    return FiniteClass(members, "{x > 0}, {x > 2}, {x > 5}", "finite", {"name": "nested-rays"})


def _mixed() -> FiniteClass:
    members = (
        Hypothesis("neg+1", SupportSpec(finite_in={IntPoint(1)}, rays={Ray.lt(0)})),
        Hypothesis("neg+2", SupportSpec(finite_in={IntPoint(2)}, rays={Ray.lt(0)})),
        Hypothesis("pos-1", SupportSpec(finite_in={IntPoint(-1)}, rays={Ray.positive()})),
        Hypothesis("mk+0", SupportSpec(finite_in={IntPoint(0)}, all_markers=True)),
    )
    return FiniteClass(members, "{Z<0 ∪ {1}, Z<0 ∪ {2}, Z>0 ∪ {-1}, markers ∪ {0}}", "finite",
                       {"name": "mixed"})


def _proper_four() -> FiniteClass:
    c = make_proper_replay_class()
    return FiniteClass(c.members, c.description, "finite", {"name": "proper-four"})


# name -> (constructor, hand-verified d*)
FINITE_CLASSES = {
    "nested-rays": (_nested_rays, 1),
    "mixed": (_mixed, 3),
    "proper-four": (_proper_four, 4),
}


def make_finite_class(name: str) -> FiniteClass:
    try:
        return FINITE_CLASSES[name][0]()
    except KeyError:
        raise ValueError(f"unknown finite class {name!r}") from None


def sample_complexity_pool(members, d: int) -> list:
    """Elements that realise every membership pattern, with d copies of each tail."""
    ints, levels = set(), {0}
    for h in members:
        ints |= h.spec.int_breakpoints()
        levels |= h.spec.marker_breakpoints()
    lo, hi = (min(ints), max(ints)) if ints else (0, 0)
    pool = [IntPoint(v) for v in range(lo - d - 1, hi + d + 2)]
    pool += [Marker(n) for n in range(1, max(levels) + d + 2)]
    return pool


def certify_sample_complexity(members, d: int) -> bool:
    """True iff every d distinct elements consistent with some member pin an infinite closure."""
    pool = sample_complexity_pool(members, d)
    member_of = {e: frozenset(i for i, h in enumerate(members) if h.contains(e)) for e in pool}
    seen = set()
    for combo in itertools.combinations(pool, d):
        consistent = frozenset(range(len(members)))
        for e in combo:
            consistent &= member_of[e]
            if not consistent:
                break
        if not consistent or consistent in seen:
            continue
        seen.add(consistent)
        if not intersection_is_infinite(members[i].spec for i in consistent):
            return False
    return True


def minimal_sample_complexity(members, max_d: int = 8) -> Optional[int]:
    for d in range(1, max_d + 1):
        if certify_sample_complexity(members, d):
            return d
    return None


# ---------------------------------------------------------------------------
# descriptor registry

def build_class(descriptor: dict):
    cid = descriptor.get("id")
    params = descriptor.get("params", {}) or {}
    if cid == "nonuniform-hard":
        return make_nonuniform_hard_class()
    if cid == "proper-replay":
        return make_proper_replay_class()
    if cid == "proper-replay-countable":
        return make_proper_replay_countable()
    if cid == "generic":
        return make_generic_countable(int(params.get("seed", 0)))
    if cid == "uniform-countable":
        return make_uniform_countable_class()
    if cid == "finite":
        return make_finite_class(params.get("name", ""))
    if cid == "separation":
        return make_separation_sample(int(params.get("count", 20)), int(params.get("seed", 0)))
    if cid == "diagonal":
        return AdaptiveClass()
    raise ValueError(f"class: unknown class id {cid!r}")
