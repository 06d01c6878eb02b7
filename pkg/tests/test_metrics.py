import math
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from groupdyn.corpus import Interaction, Message
from groupdyn.cpm import Community
from groupdyn.metrics import (MigrationTable, TopicProfile, TransitionChange, change_in_topic_exploitation,
                              divergence_bin, event_type_averages, group_message_ids, groups_per_topic,
                              max_negative_change, max_positive_change, migration_between, n_bins,
                              significant_topics, topic_divergence, topic_exploitation, transition_changes,
                              user_profiles)
from groupdyn.report import size_and_duration_breakdowns
from groupdyn.sgci import GroupTimeline, Link, TransitionEvent

from oracles import exploitation_by_counting, l1

T0 = datetime(2010, 1, 1, tzinfo=timezone.utc)


def test_exploitation_simple():
    assert list(topic_exploitation([0] * 6 + [1] * 4, 2)) == [0.6, 0.4]
    assert list(topic_exploitation([2] * 5, 3)) == [0, 0, 1.0]
    assert topic_exploitation([], 3) is None


def test_exploitation_matches_counting():
    rng = np.random.default_rng(0)
    topics = rng.integers(0, 4, 20).tolist()
    assert np.allclose(topic_exploitation(topics, 4), exploitation_by_counting(topics, 4))


def test_significance_is_strict():
    assert significant_topics([0.05, 0.95]).significant_topics == {1}
    assert significant_topics(np.full(20, 0.05)).significant_topics == frozenset()
    assert significant_topics(None).significant_topics == frozenset()


def test_change_examples():
    a, b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert change_in_topic_exploitation(a, [a]) == 0
    assert change_in_topic_exploitation(a, [b]) == 2.0
    assert max_positive_change(a, [b]) == 1.0 and max_negative_change(a, [b]) == 1.0
    p, s = np.array([0.6, 0.4]), np.array([0.5, 0.5])
    assert change_in_topic_exploitation(p, [s]) == pytest.approx(0.2)
    assert max_positive_change(p, [s]) == pytest.approx(0.1)
    assert max_negative_change(p, [s]) == pytest.approx(0.1)
    assert max_positive_change(a, [a]) == 0 and max_negative_change(a, [a]) == 0


def test_change_sums_over_successors():
    p = np.array([0.5, 0.5, 0.0])
    s1, s2 = np.array([1.0, 0, 0]), np.array([0, 0, 1.0])
    assert change_in_topic_exploitation(p, [s1, s2]) == pytest.approx(1.0 + 2.0)
    assert max_positive_change(p, [s1, s2]) == pytest.approx(1.0)
    assert max_negative_change(p, [s1, s2]) == pytest.approx(1.0)


def test_undefined_change_raises():
    undefined = TopicProfile("g", 0, np.full(2, np.nan), 0)
    with pytest.raises(ValueError):
        change_in_topic_exploitation(undefined, [np.array([1.0, 0])])
    with pytest.raises(ValueError):
        change_in_topic_exploitation(np.array([1.0, 0]), [undefined])


def test_divergence_examples():
    a = np.array([1.0, 0.0])
    assert topic_divergence(a, a) == 0.0
    assert topic_divergence(a, np.array([0.0, 1.0])) == 2.0
    assert topic_divergence(np.array([0.5, 0.5]), a) == 1.0
    assert topic_divergence(None, a) is None


def test_bins():
    assert n_bins(0.05) == 40
    assert list(divergence_bin([0.0, 0.05, 0.1, 0.15000000001, 1.99, 2.0])) == [0, 1, 2, 3, 39, 39]


profiles = st.integers(2, 8).flatmap(lambda n: st.tuples(
    arrays(float, n, elements=st.floats(0, 1)), arrays(float, n, elements=st.floats(0, 1))))


def norm(v):
    s = v.sum()
    return v / s if s > 0 else np.full(v.size, 1.0 / v.size)


@given(profiles)
def test_metric_properties(pair):
    p, q = norm(pair[0]), norm(pair[1])
    d = topic_divergence(p, q)
    assert 0 <= d <= 2 + 1e-12
    assert d == topic_divergence(q, p)
    assert math.isclose(d, l1(p, q), abs_tol=1e-12)
    c, mpc, mnc = (f(p, [q]) for f in (change_in_topic_exploitation, max_positive_change, max_negative_change))
    assert c >= 0 and mpc >= 0 and mnc >= 0
    assert abs((q - p).sum()) < 1e-9
    assert mpc + mnc <= c + 1e-12


def change(etype, slot=1, c=0.0, key=None):
    return TransitionChange(slot, etype, f"{slot}:p", (f"{slot + 1}:s",), c, c / 2, c / 2, key or (slot, etype))


def test_min_events_threshold():
    rows = [change("merge", s) for s in range(9)] + [change("split", s) for s in range(10)]
    out = event_type_averages(rows, min_events=10)
    assert [a.event_type for a in out] == ["split"]


def test_events_counted_once_per_event():
    # a merge of two predecessors yields two change rows but is one event
    rows = [TransitionChange(s, "merge", p, ("x",), 1.0, 0.5, 0.5, (s, ("a", "b"))) for s in range(10) for p in "ab"]
    assert event_type_averages(rows, 10)[0].n_events == 10
    assert event_type_averages(rows[:-2], 10) == []


def test_identical_profiles_average_zero():
    rows = [change("constancy", s) for s in range(12)]
    (avg,) = event_type_averages(rows)
    assert (avg.avg_c, avg.avg_mpc, avg.avg_mnc) == (0, 0, 0)


def test_periods_split_counts():
    rows = [change("split", s, 1.0) for s in range(20)]
    out = event_type_averages(rows, 10, period_of={s: s // 10 for s in range(20)})
    assert [(a.period, a.n_events) for a in out] == [(0, 10), (1, 10)]


def test_decay_never_reported():
    rows = [change("decay", s) for s in range(20)]
    assert event_type_averages(rows, 1) == []


def test_transition_changes_from_events():
    prof = lambda w: TopicProfile("", 0, np.array(w, dtype=float), 1)
    profiles = {"0:0": prof([1, 0]), "0:1": prof([0, 1]), "1:0": prof([0.5, 0.5])}
    ev = TransitionEvent(1, "merge", ("0:0", "0:1"), ("1:0",), (("0:0", "1:0"), ("0:1", "1:0")))
    rows = transition_changes([ev], profiles)
    assert [(r.predecessor, r.c) for r in rows] == [("0:0", 1.0), ("0:1", 1.0)]


def msg(id, author, kind="comment", post="p1"):
    return Message(id, author, T0, kind, id if kind == "post" else post)


def test_intra_group_messages():
    msgs = [msg("p1", "a", "post"), msg("c1", "b"), msg("c2", "x"), msg("p2", "x", "post"),
            msg("c3", "a", post="p2")]
    its = [Interaction("b", "a", T0, "c1"), Interaction("x", "a", T0, "c2"), Interaction("a", "x", T0, "c3")]
    assert group_message_ids(frozenset("ab"), msgs, its) == ["c1", "p1"]
    assert group_message_ids(frozenset("ab"), msgs, its, "all") == ["c1", "c3", "p1"]


def test_user_profiles_include_untopiced_authors():
    msgs = [msg("p1", "a", "post"), msg("c1", "b")]
    ups = user_profiles(msgs, {"p1": 2}, 3)
    assert list(ups["a"].weights) == [0, 0, 1] and not ups["b"].defined


def _migration_fixture():
    G = lambda s, o, m: Community(s, o, frozenset(m), 3)
    prof = lambda w: TopicProfile("", 0, np.array(w, dtype=float), 1)
    g0 = G(0, 0, ["a", "b", "c", "d"])
    g1 = G(1, 0, ["a", "b", "c", "x", "newbie"])
    users = {"a": prof([1, 0]), "b": prof([1, 0]), "c": prof([1, 0]), "d": prof([0.5, 0.5]),
             "x": prof([0, 1]), "y": prof([0, 1])}
    return g0, g1, users, prof


def test_migration_counts():
    g0, g1, users, prof = _migration_fixture()
    t = migration_between([g0], [g1], [Link("0:0", "1:0", 0.75, 3)], {"0:0": prof([1, 0])}, users)
    last = n_bins(0.05) - 1
    assert t.leave_candidates[0] == 3 and t.leavers[0] == 0
    assert t.leave_candidates[20] == 1 and t.leavers[20] == 1 and t.p_leave[20] == 1.0
    assert t.join_candidates[last] == 2 and t.joiners[last] == 1 and t.p_join[last] == 0.5
    assert t.inactive_joiners == 1
    assert np.isnan(t.p_join[5])
    row = t.rows()[5]
    assert row["p_join"] is None and row["p_leave"] is None


def test_decayed_group_skipped():
    g0, _, users, prof = _migration_fixture()
    t = migration_between([g0], [], [], {"0:0": prof([1, 0])}, users)
    assert t.groups_skipped == 1 and t.leave_candidates.sum() == 0


def test_probability_examples():
    t = MigrationTable.empty()
    t.leave_candidates[3], t.leavers[3] = 10, 3
    t.join_candidates[7], t.joiners[7] = 100, 1
    assert t.p_leave[3] == pytest.approx(0.3) and t.p_join[7] == pytest.approx(0.01)
    assert np.isnan(t.p_leave[0])
    merged = t.merge(t)
    assert merged.leave_candidates[3] == 20 and merged.p_leave[3] == pytest.approx(0.3)


def test_groups_per_topic():
    from groupdyn.metrics import GroupTopicSet
    assert list(groups_per_topic([], 4)) == [0, 0, 0, 0]
    sets = [GroupTopicSet("g", frozenset({0, 2, 3})), GroupTopicSet("h", frozenset({2}))]
    assert list(groups_per_topic(sets[:1], 4)) == [1, 0, 1, 1]
    assert list(groups_per_topic(sets, 4)) == [1, 0, 2, 1]


def test_breakdowns():
    g = Community(0, 0, frozenset("abcde"), 5)
    ts = significant_topics([0.5, 0.5, 0.0], group=g.id)
    tables = size_and_duration_breakdowns([g], [GroupTimeline((g.id,), 0, False)], {g.id: ts}, 3)
    assert tables["size_topics"] == [{"bucket": "5 -- 6", "n_topics": 2, "groups": 1}]
    assert tables["duration_topics"] == [{"bucket": "1", "n_topics": 2, "groups": 1}]
    empty = size_and_duration_breakdowns([], [], {}, 3)
    assert all(v == [] for v in empty.values())


def test_synthetic_groups_cover_few_topics():
    """Planted groups with mixed topic profiles keep their significant topic count."""
    from scenarios import Realized
    from groupdyn.metrics import group_profiles
    from groupdyn.synth import ScenarioScript

    mix = [0.3, 0.3, 0.2, 0.2, 0, 0, 0, 0, 0, 0]
    r = Realized(ScenarioScript.from_dict({"slots": 2, "k": 4, "n_topics": 10, "noise_users": 0,
                                           "groups": [{"name": "g", "size": 12, "topic": mix}]}))
    gp = group_profiles(r.groups[0], r.message_buckets[0], r.interaction_buckets[0],
                        r.ledger["message_topics"], 10)
    (p,) = gp.values()
    assert significant_topics(p.weights).significant_topics == {0, 1, 2, 3}
