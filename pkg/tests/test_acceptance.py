"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Criteria 2 and 3 share one batch of audited games (built once per session).
"""

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))
from wp_audit import WpAudit  # noqa: E402

from replaygen.adversaries import (  # noqa: E402
    DiagonalBuilder,
    DiagonalRow,
    FairEnumerator,
    NonuniformKiller,
    ProperReplayKiller,
    ReplayInjector,
    SeparationKiller,
)
from replaygen.classes import (  # noqa: E402
    FINITE_CLASSES,
    Fixed,
    certify_sample_complexity,
    make_finite_class,
    make_generic_countable,
    make_nonuniform_hard_class,
    make_proper_replay_class,
    sample_separation_hypotheses,
)
from replaygen.domain import IntPoint, Ray, SupportSpec, subset_query  # noqa: E402
from replaygen.engine import check_enumeration_with_replay, quiet_window, run_game, score_transcript  # noqa: E402
from replaygen.experiments import run_grid  # noqa: E402
from replaygen.generators import (  # noqa: E402
    DEFAULT_QUERY_CAP,
    ClosureGenerator,
    CompositeGenerator,
    EchoUniform,
    WitnessProtection,
    baseline_generator,
)
from replaygen.proper import ProperGenerator, ScriptedProperGenerator  # noqa: E402

# ---------------------------------------------------------------------------
# 1. uniform generation is unaffected by replay


def test_c1_uniform_equivalence(report):
    horizon, seeds, rates = 500, 200, (0.25, 0.5, 0.75)
    bad, runs = [], 0
    certified = {}
    for name, (_, d_star) in sorted(FINITE_CLASSES.items()):
        cls = make_finite_class(name)
        certified[name] = certify_sample_complexity(cls.members, d_star) and (
            d_star == 1 or not certify_sample_complexity(cls.members, d_star - 1))
        for seed in range(seeds):
            target = cls.get(1 + seed % cls.size)
            adv = ReplayInjector(FairEnumerator(target), rates[seed % 3], seed,
                                 "recent" if seed % 2 else "random")
            gen = EchoUniform(ClosureGenerator(cls.members), d_star)
            tr = run_game(gen, adv, horizon, Fixed(target))
            v = score_transcript(tr, target, "uniform", d_star=d_star)
            runs += 1
            if not (v.legal_for_target and v.trigger_round is not None
                    and all(t < v.trigger_round for t in v.mistake_times)):
                bad.append((name, seed, v.mistake_times[-3:]))
    ok = not bad and all(certified.values())
    report("C1 uniform equivalence", ok,
           f"{runs} runs over {len(certified)} finite classes, d* certified={certified}, "
           f"runs with a post-threshold invalid output={len(bad)}")
    assert ok, bad[:5]


# ---------------------------------------------------------------------------
# 2 and 3. Witness Protection on countable classes, with an independent audit

HORIZON = 2000
RATES = (0.0, 0.25, 0.5)
SEEDS = range(50)
# (label, class factory, target index)
WP_CASES = (
    ("nonuniform-hard/h_5", make_nonuniform_hard_class, 6),
    ("nonuniform-hard/h_inf", make_nonuniform_hard_class, 1),
    ("generic-0/#4", lambda: make_generic_countable(0), 4),
    ("generic-1/#7", lambda: make_generic_countable(1), 7),
    ("generic-2/#9", lambda: make_generic_countable(2), 9),
)


@pytest.fixture(scope="module")
def wp_runs():
    out = []
    for label, factory, ti in WP_CASES:
        for rate in RATES:
            for seed in SEEDS:
                cls = factory()
                target = cls.get(ti)
                rng = random.Random(f"{label}:{rate}:{seed}")
                sample = {rng.randint(2, HORIZON), rng.randint(2, HORIZON)}
                audit = WpAudit(cls, ti, sample_rounds=sample, seed=seed)
                adv = ReplayInjector(FairEnumerator(target), rate, seed)
                tr = run_game(WitnessProtection(cls), adv, HORIZON, Fixed(target), on_round=audit)
                v = score_transcript(tr, target, "limit")
                audit.release()
                out.append((label, rate, seed, tr, v, audit))
    return out


def test_c2_wp_limit_with_replay(report, wp_runs):
    bad = []
    worst_last, worst_q = 0, 0
    for label, rate, seed, tr, v, _ in wp_runs:
        maxq = max(r.queries for r in tr.rounds)
        worst_q = max(worst_q, maxq)
        last = v.last_mistake or 0
        worst_last = max(worst_last, last)
        quiet = not any(t > HORIZON - quiet_window(HORIZON) for t in v.mistake_times)
        if not (tr.status == "ok" and tr.horizon == HORIZON and v.legal_for_target
                and last < 1500 and quiet and maxq < DEFAULT_QUERY_CAP):
            bad.append((label, rate, seed, last, maxq, tr.status))
    ok = not bad
    report("C2 WP limit generation with replay", ok,
           f"{len(wp_runs)} runs, latest last_mistake={worst_last} (<1500 required), "
           f"max per-round queries={worst_q} (<{DEFAULT_QUERY_CAP}), failing runs={len(bad)}")
    assert ok, bad[:5]


def test_c3_wp_internals(report, wp_runs):
    filter_bad, v_bad, crit_bad, mono = [], [], [], []
    latest_noncritical = 0
    for label, rate, seed, tr, v, audit in wp_runs:
        if audit.filter_violations:
            filter_bad.append((label, rate, seed, audit.filter_violations[:3]))
        if audit.v_mismatch:
            v_bad.append((label, rate, seed, audit.v_mismatch[:3]))
        last = v.last_mistake or 0
        after = [t for t, c in enumerate(audit.target_critical, start=1) if t > last and c is False]
        if after:
            crit_bad.append((label, rate, seed, last, after[0], after[-1]))
        noncrit = [t for t, c in enumerate(audit.target_critical, start=1) if c is False]
        latest_noncritical = max([latest_noncritical] + noncrit)
        mono.extend(ok for _, _, ok in audit.monotone)
    mono_ok = len(mono) >= 1000 and all(mono)
    ok = not filter_bad and not v_bad and not crit_bad and mono_ok
    worst = max(crit_bad, key=lambda r: r[5]) if crit_bad else None
    report("C3 WP internals", ok,
           f"output filter violations={len(filter_bad)}, V_t mismatches={len(v_bad)}, "
           f"runs with a non-critical target round after the last mistake={len(crit_bad)}/{len(wp_runs)} "
           f"(worst {worst}), target critical at every round after t={latest_noncritical}, "
           f"monotone-in-m samples={sum(mono)}/{len(mono)}")
    assert ok, (filter_bad[:3], v_bad[:3], crit_bad[:3])


# ---------------------------------------------------------------------------
# 4. non-uniform generation breaks under replay


def test_c4_nonuniform_separation(report):
    cls = make_nonuniform_hard_class()
    rows, bad = [], []
    for d in (3, 5, 10):
        for name, make in (("wp", lambda: WitnessProtection(cls)), ("baseline", lambda: baseline_generator(cls)),
                           ("composite", CompositeGenerator)):
            adv = NonuniformKiller(d)
            tr = run_game(make(), adv, 1000)
            res = tr.resolution
            certs = res.certificates
            both_legal = tr.legal.get("h_inf") and tr.legal.get("h_d")
            case_a = any(t >= d for t in certs["invalid_for_h_inf"])
            case_b = len([t for t in certs["invalid_for_h_d"] if t >= d]) >= d + 1
            rows.append(f"{name}/d={d}:{res.outcome}")
            if not (both_legal and (case_a or case_b) and res.primary in ("h_inf", "h_d")):
                bad.append((name, d, res.outcome))
    ok = not bad
    report("C4 non-uniform separation", ok, f"{len(rows)} runs certified: {', '.join(rows)}")
    assert ok, bad


# ---------------------------------------------------------------------------
# 5. limit separation for the marker-indexed class


def test_c5a_composite_in_standard_setting(report):
    hyps = sample_separation_hypotheses(20, 0)
    bad = []
    worst = 0
    for h in hyps:
        tr = run_game(CompositeGenerator(), FairEnumerator(h), 2000, Fixed(h))
        v = score_transcript(tr, h, "limit")
        worst = max(worst, v.last_mistake or 0)
        if not (v.legal_for_target and v.classification == "success-at-horizon"):
            bad.append((h.name, v.last_mistake))
    ok = not bad
    report("C5a composite G without replay", ok,
           f"{len(hyps)} sampled padded hypotheses, latest last_mistake={worst}, failures={len(bad)}")
    assert ok, bad


def test_c5b_separation_killer(report):
    adv = SeparationKiller(phase_cap=2000)
    tr = run_game(CompositeGenerator(), adv, 10**6)
    res = tr.resolution
    label = res.primary
    target = res.target
    legal = bool(label and tr.legal.get(label))
    enum_ok = legal and check_enumeration_with_replay(tr, target, adv.frontier(label))
    if res.outcome == "forced-mistakes":
        J = res.certificates["J"]
        ok = enum_ok and len(set(J[1:])) >= 5 and not any(target.contains(IntPoint(j)) for j in J[1:])
        detail = f"resolved target {target.name}, distinct phase mistakes J_1..={J[1:6]}"
    elif res.outcome == "phase-cap":
        n = res.certificates["capped_phase"]
        start, end = res.certificates.get("phase_rounds", [1, tr.horizon])
        v = score_transcript(tr, target, "limit")
        phase_mistakes = [t for t in v.mistake_times if t >= start]
        ok = (enum_ok and end - start + 1 >= 2000 and v.classification == "phase-cap outcome"
              and len(phase_mistakes) == end - start + 1)
        detail = (f"phase {n} capped after {end - start + 1} rounds (z={res.certificates['z']}), "
                  f"target {target.name}, every phase round is a mistake={len(phase_mistakes) == end - start + 1}")
    else:
        ok, detail = False, f"unexpected outcome {res.outcome}"
    report("C5b separation killer dichotomy", ok, f"{detail}, legal enumeration-with-replay={enum_ok}")
    assert ok


# ---------------------------------------------------------------------------
# 6. proper generation with membership queries only


def test_c6_diagonal_builder(report):
    b = DiagonalBuilder()
    broken = []

    def hook(rec, gen, adv):
        problems = adv.check_invariants()
        if problems:
            broken.append((rec.t, problems))

    tr = run_game(ProperGenerator("greedy-mq"), b, 300, on_round=hook)
    ti = b.target_index(tr.outputs)
    target = DiagonalRow(b, ti)
    certs = {i: b.mistake_certificate(i, ti) for i in set(tr.outputs)}
    # each certificate is an explored instance inside supp(h_i) and outside the target
    certs_ok = all(j is None or (DiagonalRow(b, i).contains(IntPoint(j)) and not target.contains(IntPoint(j)))
                   for i, j in certs.items())
    mistakes = [t for t, i in enumerate(tr.outputs, start=1) if certs[i] is not None]
    legal = tr.legal[tr.resolution.primary]

    fig = DiagonalBuilder()
    run_game(ScriptedProperGenerator([2, 1], queries={2: [(4, IntPoint(6))]}), fig, 2)
    fig_ok = (fig.diagonals == [(1, 3, 2)] and fig.traps[1] == (1, 3, 4) and fig._history[1] == (3, 5)
              and fig.fills[1] == [6] and (fig.I, fig.J) == (4, 7) and fig.trap == (3, 4)
              and sorted(fig.Q) == [5, 6, 7] and fig.revealed == [1, 2])
    ok = len(mistakes) >= 20 and certs_ok and legal and not broken and fig_ok
    report("C6 diagonal builder vs greedy MQ", ok,
           f"target h_{ti} ({tr.resolution.certificates['case']}), certified proper mistakes={len(mistakes)}/300, "
           f"legal={legal}, invariant breaks={len(broken)}, figure trace={fig_ok}")
    assert ok


# ---------------------------------------------------------------------------
# 7. proper generation breaks under replay


def test_c7_proper_replay_killer(report):
    cls = make_proper_replay_class()
    nonneg, nonpos = SupportSpec(rays={Ray.nonneg()}), SupportSpec(rays={Ray.nonpos()})
    symbolic = not any(subset_query(h, nonneg) or subset_query(h, nonpos) for h in cls.members)
    rows, bad = [], []
    for rule in ("greedy-mq", "critical-proper"):
        adv = ProperReplayKiller(cls)
        tr = run_game(ProperGenerator(rule), adv, 500, hclass=cls)
        w = quiet_window(tr.horizon)
        hits = []
        for label, h in tr.resolution.targets.items():
            v = score_transcript(tr, h, "proper-limit", hclass=cls)
            tail = [t for t in v.mistake_times if t > tr.horizon - w]
            if tr.legal[label] and len(tail) == w:
                hits.append(label)
        rows.append(f"{rule}: branch {adv.branch}, failing duals={hits}")
        if not hits:
            bad.append(rule)
    ok = symbolic and not bad
    report("C7 proper replay hardness", ok,
           f"{'; '.join(rows)}; no member inside Z>=0 or Z<=0={symbolic}")
    assert ok


# ---------------------------------------------------------------------------
# 8. verdict grid


def test_c8_grid(report):
    cells = run_grid()
    shown = [c for c in cells if c.matches is not None]
    mismatched = [(c.notion, c.family, c.verdict) for c in shown if not c.matches]
    general_limit = next(c for c in cells if (c.notion, c.family) == ("In the limit", "General"))
    ok = not mismatched and general_limit.verdict == "failure" and len(shown) >= 9
    pattern = ", ".join(f"{c.notion}/{c.family}={c.verdict}" for c in cells)
    report("C8 grid reproduction", ok, f"{len(shown)} representable cells, mismatches={mismatched}; {pattern}")
    assert ok

