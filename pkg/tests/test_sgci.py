import pytest

from groupdyn.cpm import Community
from groupdyn.sgci import (SGCITracker, build_timelines, classify_component, event_census,
                           match_continuations, modified_jaccard, write_events)


def G(slot, ordinal, members):
    return Community(slot, ordinal, frozenset(members), 3)


def people(prefix, n):
    return [f"{prefix}{i}" for i in range(n)]


def test_identical_sets():
    a = frozenset("abcde")
    assert modified_jaccard(a, a) == 1.0
    assert len(match_continuations([G(0, 0, a)], [G(1, 0, a)], threshold=1.0)) == 1


def test_disjoint_sets_never_link():
    assert modified_jaccard(frozenset("abc"), frozenset("xyz")) == 0.0
    assert match_continuations([G(0, 0, "abc")], [G(1, 0, "xyz")], 0.01) == []


def test_small_group_detaching():
    a = frozenset(people("u", 10))
    b = frozenset(people("u", 4))
    assert modified_jaccard(a, b) == 1.0


def test_threshold_validation():
    with pytest.raises(ValueError):
        match_continuations([], [], 0.0)
    with pytest.raises(ValueError):
        SGCITracker(threshold=1.5).fit([[], []])


def events_for(before, after, **kw):
    return SGCITracker(**kw).fit([before, after]).events_


def test_split_equal_halves():
    ev = events_for([G(0, 0, "abcdef")], [G(1, 0, "abc"), G(1, 1, "def")])
    assert [e.type for e in ev] == ["split"]


def test_deletion_of_small_part():
    members = people("u", 50)
    ev = events_for([G(0, 0, members)], [G(1, 0, members[:45]), G(1, 1, members[45:])], size_ratio=5)
    assert [e.type for e in ev] == ["deletion"]


def test_merge_and_addition():
    m = events_for([G(0, 0, "abcd"), G(0, 1, "efgh")], [G(1, 0, "abcdefgh")])
    assert [e.type for e in m] == ["merge"]
    big = people("b", 30)
    a = events_for([G(0, 0, big), G(0, 1, "wxyz")], [G(1, 0, big + list("wxyz"))])
    assert [e.type for e in a] == ["addition"]


def test_constancy_and_change_size():
    g = people("u", 20)
    assert [e.type for e in events_for([G(0, 0, g)], [G(1, 0, g)], size_epsilon=0.1)] == ["constancy"]
    assert [e.type for e in events_for([G(0, 0, g)], [G(1, 0, g[:15])])] == ["change_size"]


def test_decay():
    ev = events_for([G(0, 0, "abc")], [G(1, 0, "xyz")])
    assert [(e.type, e.successors) for e in ev] == [("decay", ())]


def test_split_merge():
    ev = events_for([G(0, 0, "abcdef"), G(0, 1, "ghijkl")], [G(1, 0, "abcghi"), G(1, 1, "defjkl")])
    assert [e.type for e in ev] == ["split_merge"]


def test_event_slot_is_successor_slot():
    ev = SGCITracker().fit([[G(4, 0, "abc")], [G(5, 0, "abc")]]).events_
    assert ev[0].slot == 5


def persist(n_slots, members="abcde"):
    return [[G(s, 0, members)] for s in range(n_slots)]


def test_stable_timeline():
    tr = SGCITracker(stability_min_slots=3).fit(persist(5))
    assert len(tr.timelines_) == 1
    t = tr.timelines_[0]
    assert len(t) == 5 and t.stable and t.groups == tuple(f"{s}:0" for s in range(5))


def test_short_lived_group():
    tr = SGCITracker().fit([[G(0, 0, "abc")], [G(1, 0, "xyz")]])
    lengths = sorted((len(t), t.stable) for t in tr.timelines_)
    assert lengths == [(1, False), (1, False)]


def test_merge_ends_and_starts_timelines():
    slots = [[G(s, 0, "abcd"), G(s, 1, "efgh")] for s in range(4)] + \
            [[G(s, 0, "abcdefgh")] for s in range(4, 7)]
    tr = SGCITracker().fit(slots)
    assert [e.slot for e in tr.events_ if e.type == "merge"] == [4]
    ends = [t for t in tr.timelines_ if t.start_slot == 0]
    begins = [t for t in tr.timelines_ if t.start_slot == 4]
    assert len(ends) == 2 and all(len(t) == 4 for t in ends)
    assert len(begins) == 1 and len(begins[0]) == 3


def test_census():
    assert set(event_census([]).values()) == {0}
    slots = []
    for s in range(4):
        slots.append([G(s, 0, "abcd"), G(s, 1, "efgh")] if s % 2 == 0 else [G(s, 0, "abcdefgh")])
    tr = SGCITracker().fit(slots)
    assert tr.census_["merge"] == 2 and tr.census_["split"] == 1


def test_component_classification_direct():
    from groupdyn.sgci import Link
    size = {"0:0": 10, "1:0": 10}
    ev = classify_component(["0:0"], ["1:0"], [Link("0:0", "1:0", 1.0, 10)], size)
    assert ev.type == "constancy"


def test_write_events(tmp_path):
    ev = events_for([G(0, 0, "abcd"), G(0, 1, "efgh")], [G(1, 0, "abcdefgh")])
    path = write_events(ev, tmp_path / "events.csv")
    assert path.read_text().splitlines() == ["slot,type,predecessor_ids,successor_ids", "1,merge,0:0|0:1,1:0"]


def test_planted_merge_from_generator():
    from scenarios import Realized
    from groupdyn.synth import ScenarioScript

    r = Realized(ScenarioScript.from_dict({
        "slots": 4, "k": 4, "groups": [{"name": "a", "size": 5}, {"name": "b", "size": 5}],
        "events": [{"slot": 2, "type": "merge", "sources": ["a", "b"], "target": "ab"}]}))
    assert [(e.slot, e.type) for e in r.tracker.events_ if e.type != "constancy"] == [(2, "merge")]
    assert all(r.recovered(e) for e in r.ledger["events"])


def test_three_planted_merges_counted():
    from scenarios import Realized
    from groupdyn.synth import ScenarioScript

    groups = [{"name": n, "size": 5, "topic": i % 5} for i, n in enumerate("abcdef")]
    events = [{"slot": s, "type": "merge", "sources": [x, y], "target": x + y}
              for s, (x, y) in zip((1, 2, 3), ("ab", "cd", "ef"))]
    r = Realized(ScenarioScript.from_dict({"slots": 5, "k": 4, "groups": groups, "events": events}))
    assert r.tracker.census_["merge"] == 3
