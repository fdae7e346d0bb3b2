"""Example-stream strategies.

Every adversary follows the same small protocol:

* ``next_example(examples, outputs)`` returns the next example, or ``None`` to halt;
* ``observe(output)`` sees the generator's answer for the round;
* ``frontier(label)`` is the canonical index up to which the adversary promises to
  have revealed the support of the target called ``label`` (see ``engine.check_enumeration_with_replay``);
* ``resolution(examples, outputs)`` names the target(s) the run is scored against.

Killers that commit to a target only after the fact return several candidate
targets with the certificates the constructions produce.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .classes import h_infinity, h_minus, h_n, h_plus, make_separation_hypothesis, marker_hypothesis
from .domain import Element, IntPoint, Marker, canonical_index, deindex, int_index, iter_support
from .proper import DEFAULT_PROPER_BUDGET, Oracle


@dataclass
class Resolution:
    targets: dict                 # label -> hypothesis
    outcome: str
    primary: Optional[str] = None
    certificates: dict = field(default_factory=dict)

    @property
    def target(self):
        return self.targets[self.primary] if self.primary else None


class Adversary:
    name = "adversary"
    proper = False

    def reset(self):
        pass

    def observe(self, output):
        pass

    def descriptor(self) -> dict:
        return {"id": self.name, "params": {}}


# ---------------------------------------------------------------------------
# fair enumeration and replay injection

class FairEnumerator(Adversary):
    """Reveals supp(target) in ascending canonical order."""

    name = "fair"

    def __init__(self, target):
        self.target = target
        self.reset()

    def reset(self):
        self._it = iter_support(self.target)
        self._last = 0

    def next_example(self, examples, outputs):
        e = next(self._it)
        self._last = canonical_index(e)
        return e

    def frontier(self, label=None) -> int:
        return self._last

    def resolution(self, examples, outputs) -> Resolution:
        return Resolution({"target": self.target}, "fixed", "target")

    def descriptor(self):
        return {"id": self.name, "params": {"target": self.target.name}}


class ReplayInjector(Adversary):
    """Wraps a base adversary; on seeded rounds it replays an earlier generator output.

    ``choice="recent"`` replays the latest output, ``choice="random"`` a seeded
    uniform pick among all earlier outputs.  Non-firing rounds consume the base
    stream, so every base element still appears.
    """

    def __init__(self, base: Adversary, rate: float, seed: int = 0, choice: str = "recent"):
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"inject-rate must lie in [0, 1], got {rate}")
        if choice not in ("recent", "random"):
            raise ValueError(f"unknown replay choice {choice!r}")
        self.base, self.rate, self.seed, self.choice = base, rate, seed, choice
        self.name = f"replay({base.name})"
        self.proper = base.proper
        self.reset()

    def reset(self):
        self.base.reset()
        self._rng = random.Random(f"replay:{self.seed}")
        self.fired: list = []

    def next_example(self, examples, outputs):
        fire = self._rng.random() < self.rate
        if fire and outputs:
            if self.choice == "recent":
                x = outputs[-1]
            else:
                x = outputs[self._rng.randrange(len(outputs))]
            self.fired.append(len(examples) + 1)
            return x
        return self.base.next_example(examples, outputs)

    def observe(self, output):
        self.base.observe(output)

    def frontier(self, label=None) -> int:
        return self.base.frontier(label)

    def resolution(self, examples, outputs) -> Resolution:
        return self.base.resolution(examples, outputs)

    def descriptor(self):
        return {"id": "replay", "params": {"base": self.base.descriptor(), "rate": self.rate,
                                           "seed": self.seed, "choice": self.choice}}


class ScriptedAdversary(Adversary):
    """Plays a fixed list of examples, then halts."""

    name = "scripted"

    def __init__(self, examples, target=None):
        self.script = list(examples)
        self.target = target
        self.reset()

    def reset(self):
        self._pos = 0

    def next_example(self, examples, outputs):
        if self._pos >= len(self.script):
            return None
        self._pos += 1
        return self.script[self._pos - 1]

    def frontier(self, label=None) -> int:
        return 0

    def resolution(self, examples, outputs) -> Resolution:
        if self.target is None:
            return Resolution({}, "unresolved")
        return Resolution({"target": self.target}, "fixed", "target")


# ---------------------------------------------------------------------------
# non-uniform killer

class NonuniformKiller(Adversary):
    """x_t = t for t <= d, then replay of the previous output forever.

    The stream is legal for both h_inf and h_d; which one a generator fails is
    decided from its outputs (see ``resolution``).
    """

    name = "nonuniform-killer"

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("d must be >= 1")
        self.d = d

    def next_example(self, examples, outputs):
        t = len(examples) + 1
        if t <= self.d:
            return IntPoint(t)
        return outputs[-1]

    def frontier(self, label=None) -> int:
        if label == "h_d":
            return int_index(-1) - 1  # -1 is never shown
        return int_index(self.d + 1) - 1

    def resolution(self, examples, outputs) -> Resolution:
        d = self.d
        h_inf, h_d = h_infinity(), h_n(d)
        seen: set = set()
        bad_inf, bad_d = [], []
        for t, (x, o) in enumerate(zip(examples, outputs), start=1):
            seen.add(x)
            if t < d:
                continue
            if not (h_inf.contains(o) and o not in seen):
                bad_inf.append(t)
            if not (h_d.contains(o) and o not in seen):
                bad_d.append(t)
        certs = {"invalid_for_h_inf": bad_inf, "invalid_for_h_d": bad_d}
        if bad_inf:
            outcome, primary = "fails-h_inf", "h_inf"
        elif len(bad_d) >= d + 1:
            outcome, primary = "fails-h_d", "h_d"
        else:
            outcome, primary = "uncertified", None
        return Resolution({"h_inf": h_inf, "h_d": h_d}, outcome, primary, certs)

    def descriptor(self):
        return {"id": self.name, "params": {"d": self.d}}


# ---------------------------------------------------------------------------
# separation killer for the marker-indexed class

class SeparationKiller(Adversary):
    """Two-step construction against the marker-indexed class.

    Step 1 shows *^1, *^2, ... until the generator outputs an unseen marker
    *^z, then shows the markers up to *^z.  Phase n >= 1 shows z-n followed by
    J_{n-1}+1, J_{n-1}+2, ... until the generator outputs an unseen integer
    above J_{n-1}; that output becomes J_n and is never shown.  A phase that
    runs ``phase_cap`` rounds halts the game with a phase-cap outcome.
    """

    name = "separation-killer"

    def __init__(self, phase_cap: int = 2000):
        if phase_cap < 1:
            raise ValueError("phase_cap must be >= 1")
        self.phase_cap = phase_cap
        self.reset()

    def reset(self):
        self.phase = 0
        self.z: Optional[int] = None
        self.tau: Optional[int] = None
        self.J: list = []              # J_0, J_1, ...
        self.phase_start: list = []    # round at which phase n began (index n)
        self.mistake_rounds: list = [] # t_n
        self._pending: list = []       # markers still to show after *^z was found
        self._tail_next: Optional[int] = None
        self._phase_rounds = 0
        self._shown: set = set()
        self._ints_before_phase: set = set()
        self.capped: Optional[int] = None
        self._t = 0

    def next_example(self, examples, outputs):
        if self.capped is not None:
            return None
        self._t = len(examples) + 1
        if self.z is None:
            if self._phase_rounds >= self.phase_cap:
                self.capped = 0
                return None
            self._phase_rounds += 1
            x = Marker(self._t)
        elif self._pending:
            x = self._pending.pop(0)
        else:
            if self.phase == 0:
                self._start_phase(1)
            if self._phase_rounds >= self.phase_cap:
                self.capped = self.phase
                return None
            if self._phase_rounds == 0:
                x = IntPoint(self.z - self.phase)
            else:
                x = IntPoint(self._tail_next)
                self._tail_next += 1
            self._phase_rounds += 1
        self._shown.add(x)
        return x

    def _start_phase(self, n: int):
        self.phase = n
        self._phase_rounds = 0
        self._tail_next = self.J[n - 1] + 1
        self._ints_before_phase = {x.value for x in self._shown if isinstance(x, IntPoint)}
        self.phase_start.append(self._t)

    def observe(self, output):
        t = self._t
        if self.z is None:
            if isinstance(output, Marker) and output not in self._shown:
                self.tau, self.z = t, output.level
                self._pending = [Marker(k) for k in range(t + 1, self.z + 1)]
                self.J = [self.z]
                self.phase_start = [1]
            return
        if self.phase == 0 or self._phase_rounds == 0:
            return
        Jprev = self.J[self.phase - 1]
        if isinstance(output, IntPoint) and output.value > Jprev and output not in self._shown:
            self.J.append(output.value)
            self.mistake_rounds.append(t)
            self._start_phase(self.phase + 1)

    # -- targets --------------------------------------------------------------

    def phase_target(self, n: int):
        """The hypothesis in the kind-1 class at level z-1 that phase n would enumerate forever."""
        A = set(self._ints_before_phase) | {self.z - n}
        return make_separation_hypothesis(self.z - 1, 1, A, self.J[n - 1])

    def resolved_target(self):
        ints = {x.value for x in self._shown if isinstance(x, IntPoint)}
        A = {v for v in ints if v > self.z}
        return make_separation_hypothesis(self.z, 2, A)

    def frontier(self, label=None) -> int:
        if self.z is None:
            return 2 * len(self._shown) - 1 if self._shown else 0
        if self.capped is not None and self.capped > 0:
            # phase target: everything shown except the open tail
            return int_index(self._tail_next) - 1
        if self.phase == 0:
            nxt = self.z - 1
        else:
            nxt = self.z - self.phase - (1 if self._phase_rounds > 0 else 0)
        lo = 2 if nxt >= 0 else int_index(nxt)
        if self._pending:
            lo = min(lo, canonical_index(self._pending[0]))
        return lo - 1

    def resolution(self, examples, outputs) -> Resolution:
        certs = {"z": self.z, "tau": self.tau, "J": list(self.J),
                 "phase_mistake_rounds": list(self.mistake_rounds),
                 "phase_start_rounds": list(self.phase_start), "capped_phase": self.capped}
        if self.z is None:
            outcome = "phase-cap" if self.capped == 0 else "phase-0-incomplete"
            return Resolution({"marker": marker_hypothesis()}, outcome, "marker", certs)
        if self.capped is not None:
            n = self.capped
            certs["phase_rounds"] = [self.phase_start[n], len(examples)]
            return Resolution({"phase": self.phase_target(n)}, "phase-cap", "phase", certs)
        if not self.mistake_rounds:
            return Resolution({}, "unresolved", None, certs)
        return Resolution({"resolved": self.resolved_target()}, "forced-mistakes", "resolved", certs)

    def descriptor(self):
        return {"id": self.name, "params": {"phase_cap": self.phase_cap}}


# ---------------------------------------------------------------------------
# adaptive class construction against membership-query proper generators

ONES, ONE_HOT, ONE_COLD = "ones", "one-hot", "one-cold"


class DiagonalRow:
    """Hypothesis h_i of the class being built; instances are the positive integers."""

    def __init__(self, builder: "DiagonalBuilder", i: int):
        self.builder, self.i = builder, i
        self.name = f"h_{i}"

    def contains(self, e: Element) -> bool:
        if not isinstance(e, IntPoint) or e.value < 1:
            return False
        if e.value > self.builder.J:
            return True  # unexplored instances follow the all-ones continuation
        return self.builder.F(self.i, e.value)

    def contains_index(self, k: int) -> bool:
        return self.contains(deindex(k))

    def __str__(self):
        return self.name


class DiagonalBuilder(Adversary):
    """Builds the hypothesis class online while answering the generator's membership queries.

    Instance rows are stored as descriptors: all-ones, one-hot (only the owner
    contains it) or one-cold (everyone except the cold index contains it).
    Rows 1..J are assigned; anything else is unassigned.
    """

    name = "diagonal"
    proper = True

    def __init__(self, window_frac: float = 0.25):
        self.window_frac = window_frac
        self.reset()

    def reset(self):
        self.onehot: dict = {}
        self.onecold: dict = {2: 2}
        self.Q: list = [1]
        self._queued: set = {1}
        self.trap = (2, 2)
        self.I, self.J = 2, 2
        self.k = 1
        self.revealed: list = []
        self.diagonals: list = []   # (t, d_t, i_t)
        self.traps: list = [(0, 2, 2)]  # (round created, i', j')
        self.fills: list = []       # rows added by the query loop, per round
        self.round_queries: list = []
        self._history = [(self.I, self.J)]
        self._t = 0
        self._in_round = False

    # -- F ------------------------------------------------------------------

    def row_kind(self, j: int):
        if j in self.onehot:
            return ONE_HOT, self.onehot[j]
        if j in self.onecold:
            return ONE_COLD, self.onecold[j]
        return ONES, None

    def F(self, i: int, j: int) -> bool:
        if not 1 <= j <= self.J:
            raise KeyError(f"F({i},{j}) is unassigned (J={self.J})")
        if j in self.onehot:
            return i == self.onehot[j]
        if j in self.onecold:
            return i != self.onecold[j]
        return True

    def _enqueue(self, j: int):
        if j not in self._queued:
            self._queued.add(j)
            heapq.heappush(self.Q, j)

    # -- game protocol --------------------------------------------------------

    def next_example(self, examples, outputs):
        if not self.Q:
            raise AssertionError("enumeration queue ran empty")
        x = heapq.heappop(self.Q)
        self._t = len(examples) + 1
        self.revealed.append(x)
        self.k = 1
        self._in_round = True
        self._round_fill: list = []
        return IntPoint(x)

    def answer_query(self, i: int, j) -> bool:
        if isinstance(j, IntPoint):
            j = j.value
        elif not isinstance(j, int):
            return False  # markers are not instances of this class
        if i < 1:
            raise ValueError(f"hypothesis index must be >= 1, got {i}")
        if j < 1:
            return False
        m = max(j, self.k)
        if m > self.J:
            for n in range(self.J + 1, m + 1):
                self._enqueue(n)
                if self._in_round:
                    self._round_fill.append(n)
            self.J = m
        self.I = max(self.I, i)
        self.k += 1
        return self.F(i, j)

    def oracle(self, budget: int = DEFAULT_PROPER_BUDGET) -> Oracle:
        return Oracle(self.answer_query, None, budget)

    def hypothesis(self, i: int) -> "DiagonalRow":
        return DiagonalRow(self, i)

    def observe(self, i_t: int):
        t = self._t
        self.round_queries.append(self.k - 1)
        self.fills.append(getattr(self, "_round_fill", []))
        self._in_round = False
        self.I = max(self.I, i_t)
        if i_t != 1:
            self._enqueue(self.trap[1])
            d = self.J + 1
            self.onehot[d] = i_t
            e = self.J + 2
            self.onecold[e] = self.I + 1
            self.trap = (self.I + 1, e)
            self.traps.append((t, self.I + 1, e))
            self.diagonals.append((t, d, i_t))
            self.I, self.J = self.trap[0], e
        c = self.J + 1
        self._enqueue(c)
        self.J = c
        self._history.append((self.I, self.J))

    # -- audit ----------------------------------------------------------------

    def check_invariants(self) -> list:
        """Return a list of violated invariants (empty when all hold)."""
        bad = []
        special = set(self.onehot) | set(self.onecold)
        if set(self.onehot) & set(self.onecold):
            bad.append("row assigned twice")
        if special and (min(special) < 1 or max(special) > self.J):
            bad.append("structured row outside 1..J")
        ip, jp = self.trap
        if self.onecold.get(jp) != ip:
            bad.append("trap row is not one-cold at the trap index")
        for _, d, i_t in self.diagonals:
            if self.onehot.get(d) != i_t:
                bad.append(f"diagonal row {d} not owned by {i_t}")
        for (a, b), (c, e) in zip(self._history, self._history[1:]):
            if c < a or e < b:
                bad.append("counters decreased")
                break
        if any(q > self.J or q < 1 for q in self.Q):
            bad.append("queued instance outside 1..J")
        if self.Q and self.revealed and min(self.Q) <= 0:
            bad.append("bad queue")
        return bad

    def rectangle(self) -> dict:
        """Explored F-rectangle, row descriptors only."""
        rows = {}
        for j in range(1, self.J + 1):
            kind, who = self.row_kind(j)
            rows[str(j)] = kind if who is None else f"{kind}:{who}"
        return {"I": self.I, "J": self.J, "trap": list(self.trap), "rows": rows,
                "queue": sorted(self.Q)}

    # -- targets --------------------------------------------------------------

    def mistake_certificate(self, i: int, target: int) -> Optional[int]:
        """An explored instance in supp(h_i) ∖ supp(h_target), or None."""
        for j, owner in self.onehot.items():
            if owner == i and owner != target:
                return j
        for j, cold in self.onecold.items():
            if cold == target and cold != i:
                return j
        return None

    def stabilized(self, outputs) -> bool:
        T = len(outputs)
        w = max(1, math.ceil(self.window_frac * T))
        return T > 0 and all(o == 1 for o in outputs[T - w:])

    def resolution(self, examples, outputs) -> Resolution:
        if self.stabilized(outputs):
            ibar, jbar = self.trap
            certs = {"case": "overgeneralization", "trap": [ibar, jbar]}
            return Resolution({"trap": DiagonalRow(self, ibar)}, "forced-mistakes", "trap", certs)
        certs = {"case": "diagonalization", "diagonals": [list(d) for d in self.diagonals]}
        return Resolution({"h_1": DiagonalRow(self, 1)}, "forced-mistakes", "h_1", certs)

    def target_index(self, outputs) -> int:
        return self.trap[0] if self.stabilized(outputs) else 1

    def frontier(self, label=None) -> int:
        lo = min(self.Q) if self.Q else self.J + 1
        if label == "h_1":
            lo = min(lo, self.trap[1])  # the live trap instance belongs to h_1
        return int_index(lo) - 1

    def descriptor(self):
        return {"id": self.name, "params": {"window_frac": self.window_frac}}


# ---------------------------------------------------------------------------
# proper replay killer

class ProperReplayKiller(Adversary):
    """x_1 = 0; then, depending on ĥ_1, shows -1, -2 and the positives or 1, 2 and the negatives.

    Either way the stream is a legal proper enumeration with replay for both
    dual hypotheses (h1+ and h2+, or h1- and h2-), and no class member fits
    inside the intersection of their supports.
    """

    name = "proper-killer"
    proper = True

    def __init__(self, hclass):
        self.hclass = hclass
        self.reset()

    def reset(self):
        self.branch: Optional[str] = None
        self._next = 1
        self._t = 0

    def next_example(self, examples, outputs):
        self._t = t = len(examples) + 1
        if t == 1:
            return IntPoint(0)
        if self.branch is None:
            raise AssertionError("branch must be fixed after round 1")
        sign = -1 if self.branch == "+" else 1
        if t <= 3:
            return IntPoint(sign * (t - 1))
        v = -sign * self._next
        self._next += 1
        return IntPoint(v)

    def observe(self, i_t: int):
        if self._t == 1:
            h = self.hclass.get(i_t)
            if h.contains(IntPoint(-1)) and h.contains(IntPoint(-2)):
                self.branch = "+"   # duals h1+, h2+
            elif h.contains(IntPoint(1)) and h.contains(IntPoint(2)):
                self.branch = "-"   # duals h1-, h2-
            else:
                raise ValueError(f"first output {h} contains neither {{-1,-2}} nor {{1,2}}")

    def duals(self) -> dict:
        if self.branch == "+":
            return {"h1+": h_plus(1), "h2+": h_plus(2)}
        return {"h1-": h_minus(1), "h2-": h_minus(2)}

    def frontier(self, label=None) -> int:
        k = self._next - 1
        if k < 1:
            return 0
        return int_index(k + 1 if self.branch == "+" else -(k + 1)) - 1

    def resolution(self, examples, outputs) -> Resolution:
        if self.branch is None:
            return Resolution({}, "unresolved")
        return Resolution(self.duals(), "dual-targets", None, {"branch": self.branch})

    def descriptor(self):
        return {"id": self.name, "params": {"class": self.hclass.descriptor()}}
