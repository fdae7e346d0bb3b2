"""Proper generators: each round they name a hypothesis index instead of an element.

Both generators here treat every example as sure.  They reach hypotheses only
through an ``Oracle`` that logs and budgets membership and subset queries, so
the same code runs against a fixed class or an adversary that answers queries
on the fly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .domain import Element, subset_query

DEFAULT_PROPER_BUDGET = 10**6


class QueryBudgetExceeded(RuntimeError):
    pass


@dataclass
class QueryLog:
    membership: list = field(default_factory=list)  # (i, element, answer)
    subset: list = field(default_factory=list)      # (i, j, answer)

    @property
    def count(self) -> int:
        return len(self.membership) + len(self.subset)

    def to_json(self) -> dict:
        return {
            "membership": [[i, str(x), a] for i, x, a in self.membership],
            "subset": [[i, j, a] for i, j, a in self.subset],
        }


class Oracle:
    """Per-round query gateway with memoisation and a hard budget."""

    def __init__(self, member: Callable[[int, Element], bool],
                 subset: Optional[Callable[[int, int], bool]] = None,
                 budget: int = DEFAULT_PROPER_BUDGET):
        self._member = member
        self._subset = subset
        self.budget = budget
        self.size: Optional[int] = None  # number of hypotheses, when finite
        self.new_round()

    @classmethod
    def for_class(cls, hclass, budget: int = DEFAULT_PROPER_BUDGET) -> "Oracle":
        o = cls(lambda i, x: hclass.get(i).contains(x),
                lambda i, j: subset_query(hclass.get(i), hclass.get(j)), budget)
        o.size = hclass.size
        return o

    def new_round(self):
        self.log = QueryLog()
        self._memo: dict = {}

    def _spend(self):
        if self.log.count >= self.budget:
            raise QueryBudgetExceeded(f"more than {self.budget} queries in one round")

    def member(self, i: int, x: Element) -> bool:
        key = ("m", i, x)
        if key not in self._memo:
            self._spend()
            ans = bool(self._member(i, x))
            self.log.membership.append((i, x, ans))
            self._memo[key] = ans
        return self._memo[key]

    def subset(self, i: int, j: int) -> bool:
        if self._subset is None:
            raise NotImplementedError("this oracle answers membership queries only")
        key = ("s", i, j)
        if key not in self._memo:
            self._spend()
            ans = bool(self._subset(i, j))
            self.log.subset.append((i, j, ans))
            self._memo[key] = ans
        return self._memo[key]


def _distinct(examples):
    return list(dict.fromkeys(examples))


def greedy_mq_proper_step(t: int, examples, oracle: Oracle, size: Optional[int] = None) -> int:
    """First index i <= t whose hypothesis contains every example (1 if none)."""
    xs = _distinct(examples)
    top = t if size is None else min(t, size)
    for i in range(1, top + 1):
        if all(oracle.member(i, x) for x in xs):
            return i
    return 1


def critical_proper_step(t: int, examples, oracle: Oracle, size: Optional[int] = None) -> int:
    """Largest consistent n <= t whose support sits inside every earlier consistent hypothesis."""
    xs = _distinct(examples)
    top = t if size is None else min(t, size)
    consistent = {}

    def ok(i):
        if i not in consistent:
            consistent[i] = all(oracle.member(i, x) for x in xs)
        return consistent[i]

    for n in range(top, 0, -1):
        if ok(n) and all(oracle.subset(n, i) for i in range(1, n) if ok(i)):
            return n
    return 1


PROPER_STEPS = {
    "greedy-mq": greedy_mq_proper_step,
    "critical-proper": critical_proper_step,
}


class ProperGenerator:
    """Stateful wrapper: keeps the example history and calls one of the step rules."""

    proper = True

    def __init__(self, rule: str, size: Optional[int] = None):
        if rule not in PROPER_STEPS:
            raise ValueError(f"generator: unknown proper rule {rule!r}")
        self.name = rule
        self.size = size
        self._step = PROPER_STEPS[rule]
        self.reset()

    def reset(self):
        self.examples: list = []
        self.last_log: Optional[QueryLog] = None

    @property
    def last_queries(self) -> int:
        return self.last_log.count if self.last_log else 0

    def step(self, x: Element, oracle: Oracle) -> int:
        self.examples.append(x)
        oracle.new_round()
        size = self.size if self.size is not None else oracle.size
        i = self._step(len(self.examples), self.examples, oracle, size)
        self.last_log = oracle.log
        return i


class ScriptedProperGenerator:
    """Replays a fixed list of outputs, issuing the listed membership queries first."""

    proper = True

    name = "scripted-proper"

    def __init__(self, outputs, queries=None):
        self.script = list(outputs)
        self.queries = dict(queries or {})
        self.reset()

    def reset(self):
        self.examples: list = []
        self.last_log: Optional[QueryLog] = None

    @property
    def last_queries(self) -> int:
        return self.last_log.count if self.last_log else 0

    def step(self, x: Element, oracle: Oracle) -> int:
        self.examples.append(x)
        t = len(self.examples)
        oracle.new_round()
        for i, e in self.queries.get(t, ()):
            oracle.member(i, e)
        self.last_log = oracle.log
        return self.script[min(t, len(self.script)) - 1]
