import pytest

from replaygen.adversaries import (
    DiagonalBuilder,
    FairEnumerator,
    NonuniformKiller,
    ProperReplayKiller,
    ReplayInjector,
    ScriptedAdversary,
    SeparationKiller,
)
from replaygen.classes import (
    make_nonuniform_hard_class,
    make_proper_replay_class,
    make_proper_replay_countable,
    marker_hypothesis,
)
from replaygen.domain import IntPoint, Marker
from replaygen.engine import ILLEGAL, run_game, stream_tags
from replaygen.generators import CompositeGenerator, WitnessProtection
from replaygen.proper import ProperGenerator, ScriptedProperGenerator

P = IntPoint


def test_fair_enumerator():
    adv = FairEnumerator(marker_hypothesis())
    assert [adv.next_example([], []) for _ in range(3)] == [Marker(1), Marker(2), Marker(3)]
    h_inf = make_nonuniform_hard_class().get(1)
    assert FairEnumerator(h_inf).next_example([], []) == P(1)
    adv = FairEnumerator(make_nonuniform_hard_class().get(6))
    xs = [adv.next_example([], []) for _ in range(500)]
    assert len(set(xs)) == 500 and all(make_nonuniform_hard_class().get(6).contains(x) for x in xs)


class Echo:
    """Improper stub that outputs a fixed script, then repeats its last entry."""

    last_queries = 0

    def __init__(self, script):
        self.script = list(script)

    def reset(self):
        self.t = 0

    def step(self, x):
        self.t += 1
        return self.script[min(self.t, len(self.script)) - 1]


def test_replay_injector_rate_zero_matches_base():
    h = make_nonuniform_hard_class().get(6)
    inj = ReplayInjector(FairEnumerator(h), 0.0, seed=3)
    tr = run_game(Echo([P(-99)]), inj, 40)
    base = FairEnumerator(h)
    assert tr.examples == [base.next_example([], []) for _ in range(40)]
    assert inj.fired == []


def test_replay_injector_fires_on_round_two():
    h = make_nonuniform_hard_class().get(1)
    inj = ReplayInjector(FairEnumerator(h), 1.0)
    tr = run_game(Echo([P(9)]), inj, 2)
    assert tr.examples == [P(1), P(9)]
    assert inj.fired == [2]


@pytest.mark.parametrize("choice", ["recent", "random"])
def test_replay_injector_stream_is_legal(choice):
    cls = make_nonuniform_hard_class()
    h = cls.get(4)
    inj = ReplayInjector(FairEnumerator(h), 0.5, seed=7, choice=choice)
    tr = run_game(WitnessProtection(cls), inj, 100)
    assert ILLEGAL not in stream_tags(tr.examples, tr.outputs, h)
    assert inj.fired
    shown = [x for t, x in enumerate(tr.examples, start=1) if t not in inj.fired]
    base = FairEnumerator(h)
    assert shown == [base.next_example([], []) for _ in range(len(shown))]


def test_replay_injector_rejects_bad_rate():
    with pytest.raises(ValueError):
        ReplayInjector(FairEnumerator(marker_hypothesis()), 1.5)
    with pytest.raises(ValueError):
        ReplayInjector(FairEnumerator(marker_hypothesis()), 0.5, choice="oldest")


def test_nonuniform_killer_stream():
    tr = run_game(Echo([P(5), P(6), P(17)]), NonuniformKiller(3), 5)
    assert tr.examples == [P(1), P(2), P(3), P(17), P(17)]
    tr = run_game(Echo([Marker(5)]), NonuniformKiller(1), 2)
    assert tr.examples == [P(1), Marker(5)]


@pytest.mark.parametrize("d", [3, 5])
def test_nonuniform_killer_legal_for_both(d):
    cls = make_nonuniform_hard_class()
    tr = run_game(WitnessProtection(cls), NonuniformKiller(d), 60)
    assert tr.legal == {"h_inf": True, "h_d": True}
    assert tr.resolution.primary in ("h_inf", "h_d")


class SeparationStub:
    """Outputs *^1 until round 4, *^9 at round 4, then 1 until round 12, then 14."""

    last_queries = 0

    def reset(self):
        self.t = 0

    def step(self, x):
        self.t += 1
        if self.t < 4:
            return Marker(1)
        if self.t == 4:
            return Marker(9)
        if self.t < 12:
            return P(1)
        return P(14)


def test_separation_killer_scripted_trace():
    adv = SeparationKiller(phase_cap=50)
    tr = run_game(SeparationStub(), adv, 16)
    xs = tr.examples
    assert xs[:4] == [Marker(1), Marker(2), Marker(3), Marker(4)]
    assert xs[4:9] == [Marker(k) for k in range(5, 10)]
    assert adv.z == 9 and adv.tau == 4 and adv.J[0] == 9
    assert xs[9:12] == [P(8), P(10), P(11)]
    assert adv.J == [9, 14] and adv.mistake_rounds == [12]
    assert xs[12:] == [P(7), P(15), P(16), P(17)]
    assert P(14) not in xs
    res = tr.resolution
    assert res.outcome == "forced-mistakes" and tr.legal["resolved"]
    h = res.targets["resolved"]
    assert not h.contains(P(14))
    assert all(h.contains(x) for x in xs)
    assert all(h.contains(Marker(k)) for k in range(1, 10)) and not h.contains(Marker(10))


def test_separation_killer_phase_cap_against_composite():
    adv = SeparationKiller(phase_cap=200)
    tr = run_game(CompositeGenerator(), adv, 10**4)
    assert tr.halted and tr.resolution.outcome == "phase-cap"
    assert tr.legal["phase"]


def test_separation_killer_phase_zero_cap():
    adv = SeparationKiller(phase_cap=5)
    tr = run_game(Echo([Marker(1)]), adv, 100)
    assert tr.horizon == 5 and tr.resolution.outcome == "phase-cap"
    assert tr.resolution.certificates["capped_phase"] == 0


def test_diagonal_builder_init():
    b = DiagonalBuilder()
    assert b.trap == (2, 2) and (b.I, b.J) == (2, 2) and b.Q == [1]
    assert b.F(5, 1) and not b.F(2, 2) and b.F(3, 2)


def test_diagonal_figure_trace():
    b = DiagonalBuilder()
    gen = ScriptedProperGenerator([2, 1], queries={2: [(4, P(6))]})
    tr = run_game(gen, b, 2)
    assert tr.examples == [P(1), P(2)]
    # round 1: output h_2
    assert b.diagonals == [(1, 3, 2)]
    assert b.F(2, 3) and not b.F(1, 3) and not b.F(4, 3)
    assert b.traps[1] == (1, 3, 4)
    assert not b.F(3, 4) and b.F(2, 4)
    assert b.F(7, 5) and b.F(1, 5)
    assert b._history[1] == (3, 5)
    # round 2: query F(4,6) grew the rectangle, then output h_1
    assert gen.last_log.membership == [(4, P(6), True)]
    assert b.fills[1] == [6]
    assert b.trap == (3, 4) and len(b.diagonals) == 1
    assert b.J == 7 and b.I == 4
    assert sorted(b.Q) == [5, 6, 7]
    assert b.check_invariants() == []


def test_diagonal_query_counter_grows_rows():
    b = DiagonalBuilder()
    b.next_example([], [])
    assert b.answer_query(1, 1) and b.J == 2   # k = 1
    assert b.answer_query(1, 1) and b.J == 2   # k = 2
    assert b.answer_query(1, 1) and b.J == 3   # k = 3 forces row 3
    assert 3 in b.Q
    assert b.answer_query(1, Marker(2)) is False


def test_diagonal_targets():
    b = DiagonalBuilder()
    tr = run_game(ScriptedProperGenerator([2]), b, 20)
    res = tr.resolution
    assert res.primary == "h_1" and tr.legal["h_1"]
    assert all(b.mistake_certificate(2, 1) is not None for _ in tr.outputs)
    d_instances = [d for _, d, _ in b.diagonals]
    assert len(d_instances) == 20 and not any(res.target.contains(P(d)) for d in d_instances)

    b = DiagonalBuilder()
    tr = run_game(ScriptedProperGenerator([1]), b, 20)
    assert tr.resolution.primary == "trap" and b.trap == (2, 2)
    assert b.mistake_certificate(1, 2) == 2 and tr.legal["trap"]


def test_diagonal_enqueued_instances_get_revealed():
    b = DiagonalBuilder()
    run_game(ProperGenerator("greedy-mq"), b, 100)
    revealed = set(b.revealed)
    lo = min(b.Q)
    assert all(j in revealed for j in b._queued if j < lo)
    assert revealed <= b._queued
    assert b.check_invariants() == []


def test_proper_killer_branches():
    cls = make_proper_replay_class()
    adv = ProperReplayKiller(cls)
    tr = run_game(ScriptedProperGenerator([1]), adv, 7, hclass=cls)
    assert tr.examples == [P(0), P(-1), P(-2), P(1), P(2), P(3), P(4)]
    assert set(tr.resolution.targets) == {"h1+", "h2+"}
    adv = ProperReplayKiller(cls)
    tr = run_game(ScriptedProperGenerator([3]), adv, 5, hclass=cls)
    assert tr.examples == [P(0), P(1), P(2), P(-1), P(-2)]
    assert set(tr.resolution.targets) == {"h1-", "h2-"}


def test_proper_killer_countable_extension():
    cls = make_proper_replay_countable()
    tr = run_game(ProperGenerator("greedy-mq"), ProperReplayKiller(cls), 40, hclass=cls)
    assert any(tr.legal.values())


def test_scripted_adversary_halts():
    tr = run_game(Echo([P(3)]), ScriptedAdversary([P(1), P(2)]), 10)
    assert tr.halted and tr.horizon == 2 and tr.resolution.outcome == "unresolved"
