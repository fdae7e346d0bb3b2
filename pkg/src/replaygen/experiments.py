"""Manifest-driven runs and the notion-by-class-family verdict grid."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

from .adversaries import (
    DiagonalBuilder,
    FairEnumerator,
    NonuniformKiller,
    ProperReplayKiller,
    ReplayInjector,
    SeparationKiller,
)
from .artifacts import manifest_hash
from .classes import FINITE_CLASSES, UNIFORM_COUNTABLE_CORE, Fixed, build_class
from .engine import Transcript, Verdict, run_game, score_transcript
from .generators import (
    ClosureGenerator,
    CompositeGenerator,
    CoreGenerator,
    EchoUniform,
    WitnessProtection,
    baseline_generator,
)
from .proper import ProperGenerator

GENERATOR_IDS = ("wp", "baseline", "echo", "composite", "greedy-mq", "critical-proper")
ADVERSARY_IDS = ("fair", "nonuniform-killer", "separation-killer", "diagonal", "proper-killer")
KILLERS = ("nonuniform-killer", "separation-killer", "diagonal", "proper-killer")


class ManifestError(ValueError):
    """Bad manifest; the message starts with the offending field."""


DEFAULTS = {
    "generator": {"id": "wp", "params": {}},
    "adversary": {"id": "fair", "params": {}},
    "class": {"id": "nonuniform-hard", "params": {}},
    "target": None,
    "horizon": 500,
    "seed": 0,
    "inject_rate": 0.0,
}


def normalize_manifest(m: dict) -> dict:
    out = copy.deepcopy(DEFAULTS)
    for k, v in m.items():
        if k not in DEFAULTS:
            raise ManifestError(f"{k}: unknown manifest field")
        if k in ("generator", "adversary", "class"):
            if isinstance(v, str):
                v = {"id": v, "params": {}}
            if not isinstance(v, dict) or "id" not in v:
                raise ManifestError(f"{k}: expected an id string or {{id, params}} object")
            v = {"id": v["id"], "params": dict(v.get("params") or {})}
        out[k] = v
    if out["generator"]["id"] not in GENERATOR_IDS:
        raise ManifestError(f"generator: unknown generator id {out['generator']['id']!r}")
    if out["adversary"]["id"] not in ADVERSARY_IDS:
        raise ManifestError(f"adversary: unknown adversary id {out['adversary']['id']!r}")
    if not isinstance(out["horizon"], int) or out["horizon"] < 1:
        raise ManifestError("horizon: must be a positive integer")
    if not isinstance(out["seed"], int):
        raise ManifestError("seed: must be an integer")
    rate = out["inject_rate"]
    if not isinstance(rate, (int, float)) or not 0 <= rate <= 1:
        raise ManifestError("inject_rate: must lie in [0, 1]")
    out["inject_rate"] = float(rate)
    if out["target"] is not None and (not isinstance(out["target"], int) or out["target"] < 1):
        raise ManifestError("target: must be a positive class index")
    return out


@dataclass
class RunResult:
    manifest: dict
    manifest_hash: str
    transcript: Transcript
    verdicts: dict              # target label -> Verdict
    failed: bool                # some legal target certifies a failure
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        res = self.transcript.resolution
        return {
            "manifest": self.manifest,
            "manifest_sha256": self.manifest_hash,
            "status": self.transcript.status,
            "rounds": self.transcript.horizon,
            "outcome": res.outcome if res else None,
            "primary_target": res.primary if res else None,
            "legal": self.transcript.legal,
            "certificates": res.certificates if res else {},
            "verdicts": {k: v.to_json() for k, v in self.verdicts.items()},
            "failed": self.failed,
            **self.extra,
        }


def _build_class(m):
    try:
        return build_class(m["class"])
    except (ValueError, TypeError) as e:
        msg = str(e)
        raise ManifestError(msg if msg.startswith("class:") else f"class: {msg}") from None


def _uniform_base(hclass, params):
    """Base generator and d* for the burn-in wrapper."""
    if hclass.class_id == "uniform-countable":
        return CoreGenerator(UNIFORM_COUNTABLE_CORE), int(params.get("d_star", 1))
    if hclass.size is None:
        raise ManifestError("generator: echo needs a finite class or the uniform-countable class")
    d = params.get("d_star")
    if d is None:
        name = hclass.params.get("name")
        if name not in FINITE_CLASSES:
            raise ManifestError("generator: echo needs params.d_star for this class")
        d = FINITE_CLASSES[name][1]
    return ClosureGenerator(hclass.members), int(d)


def build_generator(m, hclass):
    gid, params = m["generator"]["id"], m["generator"]["params"]
    if gid == "wp":
        return WitnessProtection(hclass, **_wp_kw(params))
    if gid == "baseline":
        return baseline_generator(hclass, **_wp_kw(params))
    if gid == "echo":
        base, d = _uniform_base(hclass, params)
        return EchoUniform(base, d)
    if gid == "composite":
        return CompositeGenerator()
    return ProperGenerator(gid)


def _wp_kw(params):
    kw = {}
    if "query_cap" in params:
        kw["query_cap"] = int(params["query_cap"])
    return kw


def build_adversary(m, hclass):
    aid, params = m["adversary"]["id"], m["adversary"]["params"]
    if (aid == "diagonal") != (hclass.class_id == "diagonal"):
        raise ManifestError("class: the diagonal adversary goes with the diagonal class and only with it")
    if aid == "fair":
        if m["target"] is None:
            raise ManifestError("target: the fair enumerator needs a target index")
        if not hclass.has_index(m["target"]):
            raise ManifestError(f"target: class has no hypothesis at index {m['target']}")
        adv = FairEnumerator(hclass.get(m["target"]))
    elif aid == "nonuniform-killer":
        adv = NonuniformKiller(int(params.get("d", 3)))
    elif aid == "separation-killer":
        adv = SeparationKiller(int(params.get("phase_cap", 2000)))
    elif aid == "diagonal":
        adv = DiagonalBuilder()
    else:
        adv = ProperReplayKiller(hclass)
    if m["inject_rate"] > 0:
        if aid in KILLERS:
            raise ManifestError("inject_rate: replay injection only wraps the fair enumerator")
        adv = ReplayInjector(adv, m["inject_rate"], m["seed"], params.get("replay_choice", "recent"))
    return adv


def default_notion(m) -> str:
    gid = m["generator"]["id"]
    if gid in ("greedy-mq", "critical-proper"):
        return "proper-limit"
    if gid == "echo":
        return "uniform"
    if m["adversary"]["id"] == "nonuniform-killer":
        return "nonuniform"
    return "limit"


def run_manifest(manifest: dict, on_round=None) -> RunResult:
    m = normalize_manifest(manifest)
    h = manifest_hash(m)
    hclass = _build_class(m)
    gen = build_generator(m, hclass)
    adv = build_adversary(m, hclass)
    proper = getattr(gen, "proper", False)
    if proper != adv.proper:
        raise ManifestError("adversary: proper and improper game pieces cannot be mixed")
    target = Fixed(hclass.get(m["target"])) if m["adversary"]["id"] == "fair" else None
    tr = run_game(gen, adv, m["horizon"], target, hclass=hclass,
                  on_round=on_round, meta={"manifest_sha256": h, "seed": m["seed"],
                                           "generator": m["generator"], "adversary": m["adversary"],
                                           "class": m["class"], "horizon": m["horizon"]})
    base = adv.base if isinstance(adv, ReplayInjector) else adv
    notion = m["generator"]["params"].get("notion") or default_notion(m)
    d_star = None
    if notion == "uniform":
        d_star = gen.d_star
    elif notion == "nonuniform":
        d_star = int(m["adversary"]["params"].get("d", 3))
    verdicts = {}
    extra = {}
    for label, hyp in tr.resolution.targets.items():
        included = None
        if isinstance(base, DiagonalBuilder):
            ti = base.target_index(tr.outputs)
            included = lambda i, ti=ti: base.mistake_certificate(i, ti) is None  # noqa: E731
        verdicts[label] = score_transcript(tr, hyp, notion, d_star=d_star, included=included,
                                           hclass=hclass if proper else None)
    if isinstance(base, DiagonalBuilder):
        extra["rectangle"] = base.rectangle()
        extra["invariant_violations"] = base.check_invariants()
    failed = any(tr.legal.get(k) and v.classification in ("forced-failure", "phase-cap outcome")
                 for k, v in verdicts.items())
    return RunResult(m, h, tr, verdicts, failed, extra)


# ---------------------------------------------------------------------------
# verdict grid

NOTION_ROWS = ("Uniform", "Non-uniform", "In the limit", "Proper")
FAMILY_COLUMNS = ("Finite", "Countable", "General")

# expected pattern of the results table: True = unaffected by replay
EXPECTED = {
    ("Uniform", "Finite"): True, ("Uniform", "Countable"): True, ("Uniform", "General"): True,
    ("Non-uniform", "Finite"): True, ("Non-uniform", "Countable"): False, ("Non-uniform", "General"): False,
    ("In the limit", "Finite"): True, ("In the limit", "Countable"): True, ("In the limit", "General"): False,
    ("Proper", "Finite"): False, ("Proper", "Countable"): False, ("Proper", "General"): False,
}

GRID_SEEDS = (0, 1, 2)


def _fair(gen, cls, target, horizon, rate, seed):
    return {"generator": gen, "adversary": "fair", "class": cls, "target": target,
            "horizon": horizon, "seed": seed, "inject_rate": rate}


def grid_cells() -> dict:
    """(notion, family) -> list of manifests; cells missing here are not representable."""
    mixed = {"id": "finite", "params": {"name": "mixed"}}
    four = {"id": "finite", "params": {"name": "proper-four"}}
    cells = {
        ("Uniform", "Finite"): [_fair("echo", mixed, 3, 500, 0.5, s) for s in GRID_SEEDS],
        ("Uniform", "Countable"): [_fair("echo", "uniform-countable", 3, 500, 0.5, s) for s in GRID_SEEDS],
        ("Non-uniform", "Finite"): [_fair("echo", four, 2, 500, 0.5, s) for s in GRID_SEEDS],
        ("Non-uniform", "Countable"): [
            {"generator": "wp", "adversary": {"id": "nonuniform-killer", "params": {"d": 5}},
             "class": "nonuniform-hard", "horizon": 1000}],
        ("In the limit", "Finite"): [_fair("wp", four, 3, 2000, 0.5, s) for s in GRID_SEEDS],
        ("In the limit", "Countable"): [_fair("wp", "nonuniform-hard", 6, 2000, 0.5, s) for s in GRID_SEEDS],
        ("In the limit", "General"): [
            {"generator": "composite", "adversary": {"id": "separation-killer", "params": {"phase_cap": 2000}},
             "class": {"id": "separation", "params": {"count": 20, "seed": 0}}, "horizon": 100000}],
        ("Proper", "Finite"): [
            {"generator": "critical-proper", "adversary": "proper-killer", "class": "proper-replay",
             "horizon": 500},
            {"generator": "greedy-mq", "adversary": "proper-killer", "class": "proper-replay",
             "horizon": 500}],
        ("Proper", "Countable"): [
            {"generator": "critical-proper", "adversary": "proper-killer",
             "class": "proper-replay-countable", "horizon": 500},
            {"generator": "greedy-mq", "adversary": "diagonal", "class": "diagonal", "horizon": 300}],
    }
    return cells


@dataclass
class GridCell:
    notion: str
    family: str
    verdict: str          # success | failure | n/a
    expected: Optional[bool]
    runs: list

    @property
    def matches(self) -> Optional[bool]:
        if self.verdict == "n/a":
            return None
        if self.verdict not in ("success", "failure"):
            return False
        return (self.verdict == "success") == self.expected


def cell_verdict(results) -> str:
    if any(r.failed for r in results):
        return "failure"
    ok = all(r.transcript.status == "ok" and all(
        v.classification == "success-at-horizon" for v in r.verdicts.values()) for r in results)
    return "success" if ok else "inconclusive"


def run_grid(progress=None) -> list:
    cells = grid_cells()
    out = []
    for notion in NOTION_ROWS:
        for family in FAMILY_COLUMNS:
            manifests = cells.get((notion, family))
            if manifests is None:
                out.append(GridCell(notion, family, "n/a", EXPECTED[(notion, family)], []))
                continue
            results = [run_manifest(m) for m in manifests]
            out.append(GridCell(notion, family, cell_verdict(results), EXPECTED[(notion, family)], results))
            if progress:
                progress(out[-1])
    return out
