"""Improper (element-outputting) generators.

``WitnessProtection`` is the replay-aware limit generator for countable
classes.  It only touches hypotheses through membership: each hypothesis row
is materialised over the canonical prefix ``1..M`` (every cell counts as one
membership query) and all set algebra is done on those bit rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .domain import (
    Element,
    IntPoint,
    Marker,
    canonical_index,
    deindex,
    intersection_is_infinite,
    support_prefix,
)

DEFAULT_QUERY_CAP = 10**6


class ProtocolViolation(RuntimeError):
    """The game reached a state the protocol rules out."""


class RoundBudgetExceeded(RuntimeError):
    """A round asked more membership queries than its cap allows."""

    def __init__(self, t: int, queries: int, cap: int):
        super().__init__(f"round {t}: {queries} membership queries exceed cap {cap}")
        self.t, self.queries, self.cap = t, queries, cap


def _lowbit(x: int) -> int:
    return (x & -x).bit_length() - 1


# ---------------------------------------------------------------------------
# uniform generators and the burn-in wrapper

class ClosureGenerator:
    """Outputs the canonical-least unseen element of the intersection of consistent supports.

    Calls on a growing history are incremental: the seen set, the consistent
    members and a scan cursor carry over, and any other history starts afresh.
    """

    def __init__(self, members: Sequence):
        self.members = tuple(members)
        self._forget()

    def _forget(self):
        self._n = 0
        self._last = None
        self._seen: set = set()
        self._consistent = list(self.members)
        self._cursor = 1

    def __call__(self, history: Sequence[Element]) -> Element:
        if len(history) < self._n or (self._n and history[self._n - 1] != self._last):
            self._forget()
        for x in history[self._n:]:
            self._seen.add(x)
            keep = [h for h in self._consistent if h.contains(x)]
            if len(keep) != len(self._consistent):
                self._consistent = keep
                self._cursor = 1
        self._n = len(history)
        self._last = history[-1]
        consistent = self._consistent
        if not consistent or not intersection_is_infinite(h.spec for h in consistent):
            # only reachable before the sample-complexity threshold
            return history[0]
        k = self._cursor
        while True:
            e = deindex(k)
            if e not in self._seen and all(h.contains_index(k) for h in consistent):
                self._cursor = k
                return e
            k += 1


class CoreGenerator:
    """Outputs the least unseen element of a support shared by every class member."""

    def __init__(self, core):
        self.core = core

    def __call__(self, history: Sequence[Element]) -> Element:
        seen = set(history)
        k = 1
        while True:
            if self.core.contains_index(k):
                e = deindex(k)
                if e not in seen:
                    return e
            k += 1


def echo_uniform_step(base: Callable, d_star: int, history: Sequence[Element]) -> Element:
    if len(set(history)) >= d_star:
        return base(history)
    return history[0]


class EchoUniform:
    """Burn-in wrapper: repeat x_1 until d* distinct examples are seen, then defer to ``base``."""

    name = "echo"
    last_queries = 0

    def __init__(self, base: Callable, d_star: int):
        if d_star < 1:
            raise ValueError("d_star must be >= 1")
        self.base, self.d_star = base, d_star
        self.reset()

    def reset(self):
        self.history: list = []

    def step(self, x: Element) -> Element:
        self.history.append(x)
        return echo_uniform_step(self.base, self.d_star, self.history)


# ---------------------------------------------------------------------------
# reference versions of the Witness Protection primitives (element level)

def update_sure_set(S: frozenset, O: frozenset, x: Element) -> frozenset:
    return S if x in O else frozenset(S) | {x}


def _prefix(hclass, i: int, m: int) -> frozenset:
    return support_prefix(hclass.get(i), m) if m >= 1 else frozenset()


def witness_set(V, m: int, O, hclass) -> dict:
    """Map each pair (i, j), j < i in V, to the minimal element of supp(h_i)[m] ∖ (supp(h_j)[m] ∪ O) or None."""
    V = sorted(V)
    pre = {i: _prefix(hclass, i, m) for i in V}
    out = {}
    for a, i in enumerate(V):
        for j in V[:a]:
            delta = pre[i] - pre[j] - set(O)
            out[(i, j)] = min(delta, key=canonical_index) if delta else None
    return out


def is_tm_critical(n: int, t: int, m: int, S, O, hclass) -> bool:
    if n > t:
        raise ValueError("criticality is only defined for n <= t")
    h_n = hclass.get(n)
    if not all(h_n.contains(x) for x in S):
        return False
    pre_n = _prefix(hclass, n, m)
    for i in range(1, n):
        if not hclass.has_index(i):
            continue
        h_i = hclass.get(i)
        if all(h_i.contains(x) for x in S):
            if not pre_n <= _prefix(hclass, i, m) | set(O):
                return False
    return True


# ---------------------------------------------------------------------------
# Witness Protection

@dataclass
class WpRound:
    t: int
    sure: bool
    n: Optional[int]
    m: int
    V: tuple
    queries: int
    fallback: bool


class WitnessProtection:
    """Replay-aware limit generator for a countable class (membership queries only).

    With ``replay_aware=False`` every example counts as sure and neither past
    outputs nor witnesses are excluded; that variant is a reconstruction of the
    standard-setting membership-query generator and serves as the baseline.

    Internally, ``f[n]`` is the least canonical index at which ``h_n`` (minus
    past outputs) leaves the intersection of the earlier consistent rows, or 0
    if there is none inside the current window.  ``h_n`` is (t,m)-critical
    exactly when ``f[n]`` is 0 or exceeds m.
    """

    def __init__(self, hclass, *, replay_aware: bool = True,
                 query_cap: int = DEFAULT_QUERY_CAP, chunk: int = 256, check: bool = False):
        self.hclass = hclass
        self.replay_aware = replay_aware
        self.query_cap = query_cap
        self.chunk = chunk
        self.check = check
        self.name = "wp" if replay_aware else "baseline"
        self.reset()

    def reset(self):
        self.t = 0
        self.S: set = set()
        self.Smask = 0
        self.outputs: list = []
        self.out_set: set = set()
        self.Omask = 0
        self.V: list = []
        self.rows: dict = {}
        self.f: dict = {}
        self.P_all = None
        self.M = 0
        self.m = 0
        self.last_queries = 0
        self.total_queries = 0
        self.last: Optional[WpRound] = None

    # -- oracle access ------------------------------------------------------

    def _charge(self, n: int):
        self.last_queries += n
        self.total_queries += n
        if self.last_queries > self.query_cap:
            raise RoundBudgetExceeded(self.t, self.last_queries, self.query_cap)

    def _row(self, i: int, M: int, known: int = 0) -> int:
        """Row of h_i over 1..M; cells 1..known are already cached and cost nothing."""
        h = self.hclass.get(i)
        self._charge(M - known)
        row = self.rows.get(i, 0) if known else 0
        if hasattr(h, "row_bits"):
            return row | h.row_bits(M, known + 1)
        for k in range(known + 1, M + 1):
            if h.contains_index(k):
                row |= 1 << k
        return row

    def _grow(self, need: int):
        new_M = need + self.chunk
        for i in self.V:
            self.rows[i] = self._row(i, new_M, self.M)
        self.M = new_M
        self._recompute_f()

    def _B(self, n: int) -> int:
        return self.rows[n] & ~self.Omask if self.replay_aware else self.rows[n]

    def _recompute_f(self):
        P = None
        for n in self.V:
            if P is None:
                self.f[n] = 0
                P = self.rows[n]
            else:
                d = self._B(n) & ~P
                self.f[n] = _lowbit(d) if d else 0
                P &= self.rows[n]
        self.P_all = P

    def _in_witnesses(self, x: int) -> bool:
        """Is canonical index x some w_ij for the current V, O and window?"""
        Ix, Jx = [], []
        for i in self.V:
            (Ix if self.rows[i] >> x & 1 else Jx).append(i)
        if not Ix or not Jx or Jx[0] > Ix[-1]:
            return False
        below = ~self.Omask & ((1 << x) - 1)
        for i in reversed(Ix):
            if i < Jx[0]:
                break
            bi = self.rows[i] & below
            for j in Jx:
                if j >= i:
                    break
                if not bi & ~self.rows[j]:
                    return True
        return False

    # -- one round ----------------------------------------------------------

    def step(self, x: Element) -> Element:
        self.t += 1
        t = self.t
        self.last_queries = 0
        k = canonical_index(x)
        sure = (not self.replay_aware) or k not in self.out_set
        if k > self.M:
            self._grow(k)

        changed = False
        if sure and k not in self.S:
            self.S.add(k)
            self.Smask |= 1 << k
            keep = [i for i in self.V if self.rows[i] >> k & 1]
            if len(keep) != len(self.V):
                for i in self.V:
                    if not self.rows[i] >> k & 1:
                        del self.rows[i]
                        del self.f[i]
                self.V = keep
                changed = True

        if self.hclass.has_index(t):
            row = self._row(t, self.M)
            if not self.Smask & ~row:
                self.rows[t] = row
                if not changed:
                    if self.P_all is None:
                        self.f[t] = 0
                        self.P_all = row
                    else:
                        d = self._B(t) & ~self.P_all
                        self.f[t] = _lowbit(d) if d else 0
                        self.P_all &= row
                self.V.append(t)
        if changed:
            self._recompute_f()
        if self.check:
            self._verify_f()

        if not self.V:
            if not self.S:
                raise ProtocolViolation(f"round {t}: no consistent hypothesis and no sure example")
            out = min(self.S)
            self.last = WpRound(t, sure, None, self.m, (), self.last_queries, True)
        else:
            out = self._select(k)
            self.last = WpRound(t, sure, self._n, self.m, tuple(self.V), self.last_queries, False)
        self.outputs.append(out)
        self.out_set.add(out)
        self.Omask |= 1 << out
        return deindex(out)

    def _select(self, k: int) -> int:
        m = max(self.m, k)
        f = self.f
        excl = self.Smask | (self.Omask if self.replay_aware else 0)
        alive = None
        cur, scan_from = None, 1
        while True:
            m += 1
            if m > self.M:
                self._grow(m)
                alive = None
            if alive is None:
                alive = [n for n in self.V if not f[n] or f[n] > m]
            while f[alive[-1]] and f[alive[-1]] <= m:
                alive.pop()
            n = alive[-1]
            if n != cur:
                cur, scan_from = n, 1
            cand = (self.rows[n] & ~excl) >> scan_from << scan_from
            cand &= (1 << (m + 1)) - 1
            while cand:
                low = cand & -cand
                xk = low.bit_length() - 1
                if not self.replay_aware or not self._in_witnesses(xk):
                    self.m, self._n = m, n
                    return xk
                cand ^= low
            scan_from = m + 1

    # -- introspection ------------------------------------------------------

    def _verify_f(self):
        saved = dict(self.f), self.P_all
        self._recompute_f()
        if saved[0] != self.f:
            raise AssertionError(f"round {self.t}: incremental criticality cache diverged")

    def critical_index(self, m: Optional[int] = None) -> Optional[int]:
        """max{n in V : h_n is (t,m)-critical} for the current round state."""
        m = self.m if m is None else m
        if m > self.M:
            self._grow(m)
        best = None
        for n in self.V:
            if not self.f[n] or self.f[n] > m:
                best = n
        return best

    def witnesses(self, m: Optional[int] = None) -> set:
        """W^{(t,m)} as canonical indices (quadratic in |V|; meant for tracing)."""
        m = self.m if m is None else m
        if m > self.M:
            self._grow(m)
        window = (1 << (m + 1)) - 1
        W = set()
        for a, i in enumerate(self.V):
            bi = self.rows[i] & ~self.Omask & window
            for j in self.V[:a]:
                d = bi & ~self.rows[j]
                if d:
                    W.add(_lowbit(d))
        return W

    def snapshot(self, with_witnesses: bool = False) -> dict:
        info = self.last
        # state after the round, with O_{t-1} (exclude the output just made)
        snap = {
            "t": self.t,
            "sure": info.sure if info else None,
            "S": [str(deindex(k)) for k in sorted(self.S)],
            "V": list(info.V) if info else [],
            "critical": info.n if info else None,
            "m": info.m if info else self.m,
            "queries": info.queries if info else 0,
            "fallback": info.fallback if info else False,
            "output": str(deindex(self.outputs[-1])) if self.outputs else None,
        }
        if with_witnesses and info and not info.fallback:
            last = self.outputs[-1]
            self.Omask ^= 1 << last
            try:
                snap["witnesses"] = [str(deindex(k)) for k in sorted(self.witnesses(info.m))]
            finally:
                self.Omask |= 1 << last
        return snap


def baseline_generator(hclass, **kw) -> WitnessProtection:
    return WitnessProtection(hclass, replay_aware=False, **kw)


# ---------------------------------------------------------------------------
# generators for the marker-indexed class

def gb_step(b: int, history: Sequence, outputs: Sequence) -> IntPoint:
    """G^b on an integer history with its own earlier integer outputs."""
    xs = [x.value if isinstance(x, IntPoint) else int(x) for x in history]
    os = [o.value if isinstance(o, IntPoint) else int(o) for o in outputs]
    if not xs:
        raise ValueError("G^b needs a nonempty history")
    if b in xs:
        return IntPoint(max([len(xs)] + os + xs) + 1)
    return IntPoint(min([b] + os + xs) - 1)


def marker_max(history: Sequence[Element]) -> int:
    return max((x.level for x in history if isinstance(x, Marker)), default=0)


def composite_g_step(history: Sequence[Element], outputs: Sequence[Element]) -> Element:
    """Fresh marker while only markers were seen; otherwise G^{m(t)} on the integer part."""
    if not history:
        raise ValueError("composite generator needs a nonempty history")
    m = marker_max(history)
    ints = [x for x in history if isinstance(x, IntPoint)]
    if not ints:
        return Marker(m + 1)
    int_outputs = [o for o in outputs if isinstance(o, IntPoint)]
    return gb_step(m, ints, int_outputs)


class CompositeGenerator:
    name = "composite"
    last_queries = 0

    def __init__(self):
        self.reset()

    def reset(self):
        self.history: list = []
        self.outputs: list = []

    def step(self, x: Element) -> Element:
        self.history.append(x)
        o = composite_g_step(self.history, self.outputs)
        self.outputs.append(o)
        return o


class GbGenerator:
    """G^b alone; marker inputs are ignored."""

    last_queries = 0

    def __init__(self, b: int):
        self.b = b
        self.name = f"G^{b}"
        self.reset()

    def reset(self):
        self.ints: list = []
        self.outputs: list = []

    def step(self, x: Element) -> Element:
        if isinstance(x, IntPoint):
            self.ints.append(x)
        if not self.ints:
            o = IntPoint(self.b - 1)
        else:
            o = gb_step(self.b, self.ints, self.outputs)
        self.outputs.append(o)
        return o
