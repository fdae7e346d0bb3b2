"""Game loop, replay legality, scoring and serialisation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .adversaries import Resolution
from .classes import Fixed, PostHoc
from .domain import Element, canonical_index, subset_query
from .generators import RoundBudgetExceeded
from .proper import DEFAULT_PROPER_BUDGET, Oracle, QueryBudgetExceeded

TRANSCRIPT_SCHEMA = "replaygen.transcript/1"
VERDICT_SCHEMA = "replaygen.verdict/1"
DEFAULT_QUIET_FRAC = 0.25

SUPPORT, REPLAY, ILLEGAL, PENDING = "support", "replay", "illegal", "pending"


class ProtocolViolationError(RuntimeError):
    def __init__(self, t: int, msg: str):
        super().__init__(f"round {t}: {msg}")
        self.t = t


@dataclass
class RoundRecord:
    t: int
    example: Element
    tag: str
    sure: bool
    output: object  # Element, or a hypothesis index in proper games
    queries: int = 0

    def to_json(self) -> dict:
        out = self.output if isinstance(self.output, int) else str(self.output)
        return {"t": self.t, "example": str(self.example), "tag": self.tag, "sure": self.sure,
                "output": out, "queries": self.queries}


@dataclass
class Transcript:
    rounds: list
    meta: dict
    proper: bool = False
    status: str = "ok"           # ok | non-halting-round | adversary-bug
    halted: bool = False
    resolution: Optional[Resolution] = None
    legal: dict = field(default_factory=dict)   # target label -> bool
    hypothesis_of: Optional[Callable] = None

    @property
    def examples(self) -> list:
        return [r.example for r in self.rounds]

    @property
    def outputs(self) -> list:
        return [r.output for r in self.rounds]

    @property
    def horizon(self) -> int:
        return len(self.rounds)


class _SupportUnion:
    """Membership in the union of supports of earlier proper outputs."""

    def __init__(self, hypothesis_of: Callable):
        self.hypothesis_of = hypothesis_of
        self.indices: list = []

    def add(self, i: int):
        if i not in self.indices:
            self.indices.append(i)

    def __contains__(self, x) -> bool:
        return any(self.hypothesis_of(i).contains(x) for i in self.indices)


def validate_step(target, prior_outputs, x: Element) -> str:
    if target.contains(x):
        return SUPPORT
    if x in prior_outputs:
        return REPLAY
    return ILLEGAL


def stream_tags(examples, outputs, target, proper: bool = False,
                hypothesis_of: Optional[Callable] = None) -> list:
    """Legality tag of every round against ``target`` (pure; replays of later outputs do not count)."""
    prior = _SupportUnion(hypothesis_of) if proper else set()
    tags = []
    for x, o in zip(examples, outputs):
        tags.append(validate_step(target, prior, x))
        prior.add(o)
    return tags


def sure_flags(examples, outputs, proper: bool = False,
               hypothesis_of: Optional[Callable] = None) -> list:
    prior = _SupportUnion(hypothesis_of) if proper else set()
    flags = []
    for x, o in zip(examples, outputs):
        flags.append(x not in prior)
        prior.add(o)
    return flags


def run_game(generator, adversary, horizon: int, target=None, *, hclass=None,
             hypothesis_of: Optional[Callable] = None, on_round: Optional[Callable] = None,
             meta: Optional[dict] = None, proper_budget: int = DEFAULT_PROPER_BUDGET) -> Transcript:
    """Play up to ``horizon`` rounds.

    ``target`` is ``Fixed(h)`` (every step checked as it happens), ``PostHoc(resolver)``
    or ``None`` (the adversary's own resolution).  Post-hoc targets are resolved
    after the last round and the whole stream is re-validated against them.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    proper = bool(getattr(generator, "proper", False))
    oracle = None
    if proper:
        if hasattr(adversary, "oracle"):
            oracle = adversary.oracle(proper_budget)
        elif hclass is not None:
            oracle = Oracle.for_class(hclass, proper_budget)
        else:
            raise ValueError("proper games need a class or an adversary that answers queries")
        if hypothesis_of is None:
            if hasattr(adversary, "hypothesis"):
                hypothesis_of = adversary.hypothesis
            elif hclass is not None:
                hypothesis_of = hclass.get
            else:
                raise ValueError("proper games need hypothesis_of for the output indices")

    generator.reset()
    adversary.reset()
    fixed = target.hypothesis if isinstance(target, Fixed) else None
    tr = Transcript([], dict(meta or {}), proper=proper, hypothesis_of=hypothesis_of)
    examples, outputs = [], []
    prior = _SupportUnion(hypothesis_of) if proper else set()

    for t in range(1, horizon + 1):
        x = adversary.next_example(examples, outputs)
        if x is None:
            tr.halted = True
            break
        if fixed is not None:
            tag = validate_step(fixed, prior, x)
            if tag == ILLEGAL:
                raise ProtocolViolationError(t, f"example {x} is neither in the target nor a replay")
        else:
            tag = PENDING
        sure = x not in prior
        try:
            o = generator.step(x, oracle) if proper else generator.step(x)
        except (RoundBudgetExceeded, QueryBudgetExceeded):
            tr.status = "non-halting-round"
            tr.halted = True
            tr.meta["non_halting_round"] = t
            break
        adversary.observe(o)
        examples.append(x)
        outputs.append(o)
        prior.add(o)
        rec = RoundRecord(t, x, tag, sure, o, getattr(generator, "last_queries", 0))
        tr.rounds.append(rec)
        if on_round is not None:
            on_round(rec, generator, adversary)

    if isinstance(target, Fixed):
        tr.resolution = Resolution({"target": target.hypothesis}, "fixed", "target")
    elif isinstance(target, PostHoc):
        res = target.resolver(tr)
        tr.resolution = res if isinstance(res, Resolution) else Resolution({"target": res}, "post-hoc", "target")
    else:
        tr.resolution = adversary.resolution(examples, outputs)

    for label, h in tr.resolution.targets.items():
        tags = stream_tags(examples, outputs, h, proper, hypothesis_of)
        tr.legal[label] = ILLEGAL not in tags
        if label == (tr.resolution.primary or next(iter(tr.resolution.targets))):
            for rec, tag in zip(tr.rounds, tags):
                rec.tag = tag
    primary = tr.resolution.primary
    if primary is not None and not tr.legal[primary]:
        tr.status = "adversary-bug"
    return tr


# ---------------------------------------------------------------------------
# scoring

@dataclass
class Verdict:
    legal_for_target: bool
    mistake_times: list
    last_mistake: Optional[int]
    notion: str
    classification: str
    horizon: int
    target: str = ""
    trigger_round: Optional[int] = None
    quiet_tail: int = 0

    def to_json(self) -> dict:
        return {"schema": VERDICT_SCHEMA, "legal_for_target": self.legal_for_target,
                "mistake_times": self.mistake_times, "last_mistake": self.last_mistake,
                "notion": self.notion, "classification": self.classification,
                "horizon": self.horizon, "target": self.target,
                "trigger_round": self.trigger_round, "quiet_tail": self.quiet_tail}


NOTIONS = ("uniform", "nonuniform", "limit", "proper-limit")


def improper_mistakes(examples, outputs, target) -> list:
    seen: set = set()
    bad = []
    for t, (x, o) in enumerate(zip(examples, outputs), start=1):
        seen.add(x)
        if not target.contains(o) or o in seen:
            bad.append(t)
    return bad


def proper_mistakes(outputs, included: Callable[[int], bool]) -> list:
    cache: dict = {}
    bad = []
    for t, i in enumerate(outputs, start=1):
        if i not in cache:
            cache[i] = included(i)
        if not cache[i]:
            bad.append(t)
    return bad


def quiet_window(horizon: int, frac: float = DEFAULT_QUIET_FRAC) -> int:
    return max(1, math.ceil(frac * horizon))


def trigger_round(examples, d_star: int) -> Optional[int]:
    seen: set = set()
    for t, x in enumerate(examples, start=1):
        seen.add(x)
        if len(seen) >= d_star:
            return t
    return None


def score_transcript(tr: Transcript, target, notion: str = "limit", *, d_star: Optional[int] = None,
                     quiet_frac: float = DEFAULT_QUIET_FRAC, included: Optional[Callable] = None,
                     hclass=None) -> Verdict:
    """Score a finished game against one target.

    Improper mistake at t: o_t is not in supp(target) ∖ {x_1..x_t}.  Proper
    mistake at t: supp(ĥ_t) ⊄ supp(target), decided by ``included(i)`` (default:
    a symbolic subset query on the class member).
    """
    if notion not in NOTIONS:
        raise ValueError(f"notion must be one of {NOTIONS}, got {notion!r}")
    examples, outputs = tr.examples, tr.outputs
    T = len(outputs)
    if tr.proper:
        if included is None:
            if hclass is None:
                raise ValueError("proper scoring needs ``included`` or a class")
            included = lambda i: subset_query(hclass.get(i), target)  # noqa: E731
        mistakes = proper_mistakes(outputs, included)
    else:
        mistakes = improper_mistakes(examples, outputs, target)
    tags = stream_tags(examples, outputs, target, tr.proper, tr.hypothesis_of)
    legal = ILLEGAL not in tags
    last = mistakes[-1] if mistakes else None
    w = quiet_window(T, quiet_frac) if T else 0
    trig = None
    if notion in ("uniform", "nonuniform"):
        if d_star is None:
            raise ValueError(f"{notion} scoring needs d_star")
        trig = trigger_round(examples, d_star)
        ok = trig is None or all(t < trig for t in mistakes)
    else:
        ok = last is None or last <= T - w
    cls = "success-at-horizon" if ok else "forced-failure"
    if tr.resolution is not None and tr.resolution.outcome == "phase-cap":
        cls = "phase-cap outcome"
    if tr.status != "ok":
        cls = tr.status
    return Verdict(legal, mistakes, last, notion, cls, T, getattr(target, "name", str(target)), trig, w)


def check_enumeration_with_replay(tr: Transcript, target, frontier: int) -> bool:
    """Legal replay stream that shows every support element with canonical index <= frontier."""
    if ILLEGAL in stream_tags(tr.examples, tr.outputs, target, tr.proper, tr.hypothesis_of):
        return False
    shown = {canonical_index(x) for x in tr.examples}
    return all(k in shown for k in range(1, frontier + 1) if target.contains_index(k))


# ---------------------------------------------------------------------------
# serialisation

def transcript_lines(tr: Transcript, manifest_hash: str = "") -> list:
    header = {"schema": TRANSCRIPT_SCHEMA, "kind": "header", "manifest_sha256": manifest_hash,
              "meta": tr.meta, "status": tr.status, "halted": tr.halted, "proper": tr.proper}
    lines = [json.dumps(header, sort_keys=True)]
    lines += [json.dumps(r.to_json(), sort_keys=True) for r in tr.rounds]
    return lines


def write_transcript(tr: Transcript, path, manifest_hash: str = ""):
    from .artifacts import atomic_write
    atomic_write(path, "\n".join(transcript_lines(tr, manifest_hash)) + "\n")


def resolution_json(res: Optional[Resolution]) -> Optional[dict]:
    if res is None:
        return None
    return {"outcome": res.outcome, "primary": res.primary,
            "targets": {k: getattr(h, "name", str(h)) for k, h in res.targets.items()},
            "certificates": res.certificates}
