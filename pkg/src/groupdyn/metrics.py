"""Topic profiles of groups and users, topic change across transitions, and migration."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._validation import check_profile
from .corpus import Interaction, Message
from .cpm import Community
from .sgci import Link, TransitionEvent


@dataclass(frozen=True)
class TopicProfile:
    scope: str
    slot: int
    weights: np.ndarray
    message_count: int

    @property
    def defined(self) -> bool:
        return self.message_count > 0


@dataclass(frozen=True)
class GroupTopicSet:
    group: str
    significant_topics: frozenset[int]
    exploitation: np.ndarray | None = field(default=None, compare=False)


def topic_exploitation(topics: Iterable[int], n_topics: int) -> np.ndarray | None:
    """Fraction of messages whose dominant topic is k, for every k; None without messages."""
    counts = np.bincount(np.asarray(list(topics), dtype=np.int64), minlength=n_topics)[:n_topics]
    total = counts.sum()
    if total == 0:
        return None
    return counts / total


def significant_topics(exploitation, threshold: float = 0.05, group: str = "") -> GroupTopicSet:
    """Topics with exploitation strictly above *threshold*."""
    if exploitation is None:
        return GroupTopicSet(group, frozenset(), None)
    ex = np.asarray(exploitation, dtype=float)
    return GroupTopicSet(group, frozenset(int(i) for i in np.flatnonzero(ex > threshold)), ex)


def profile_from_topics(topics: Sequence[int], n_topics: int, scope: str = "", slot: int = 0) -> TopicProfile:
    ex = topic_exploitation(topics, n_topics)
    if ex is None:
        return TopicProfile(scope, slot, np.full(n_topics, np.nan), 0)
    return TopicProfile(scope, slot, ex, len(topics))


def group_message_ids(members: frozenset[str], messages: Sequence[Message],
                      interactions: Sequence[Interaction], scope: str = "intra") -> list[str]:
    """Messages a group wrote in a slot.

    ``intra``: comments from a member addressed to another member, plus
    members' posts that received such a comment.  ``all``: every message
    written by a member.
    """
    if scope == "all":
        return sorted(m.id for m in messages if m.author in members)
    if scope != "intra":
        raise ValueError(f"unknown group message scope {scope!r}")
    by_id = {m.id: m for m in messages}
    ids = set()
    for it in interactions:
        if it.source == it.target or it.source not in members or it.target not in members:
            continue
        msg = by_id.get(it.message_id)
        if msg is None:
            continue
        ids.add(msg.id)
        post = by_id.get(msg.post_id)
        if post is not None and post.author in members and post.author != msg.author:
            ids.add(post.id)
    return sorted(ids)


def group_profiles(communities: Sequence[Community], messages: Sequence[Message],
                   interactions: Sequence[Interaction], message_topics: Mapping[str, int],
                   n_topics: int, scope: str = "intra") -> dict[str, TopicProfile]:
    out = {}
    for c in communities:
        ids = group_message_ids(c.members, messages, interactions, scope)
        topics = [message_topics[i] for i in ids if i in message_topics]
        out[c.id] = profile_from_topics(topics, n_topics, c.id, c.slot)
    return out


def user_profiles(messages: Sequence[Message], message_topics: Mapping[str, int],
                  n_topics: int, slot: int = 0) -> dict[str, TopicProfile]:
    """Profile of every author in the slot from all messages they wrote."""
    topics: dict[str, list[int]] = {}
    for m in messages:
        bucket = topics.setdefault(m.author, [])
        if m.id in message_topics:
            bucket.append(message_topics[m.id])
    return {u: profile_from_topics(t, n_topics, u, slot) for u, t in sorted(topics.items())}


def _weights(p) -> np.ndarray | None:
    if isinstance(p, TopicProfile):
        return p.weights if p.defined else None
    return None if p is None else check_profile(p)


def _pair(pred, succs):
    g = _weights(pred)
    if g is None:
        raise ValueError("predecessor profile is undefined")
    rows = [w for w in (_weights(s) for s in succs) if w is not None]
    if not rows:
        raise ValueError("no successor with a defined profile; change is undefined")
    return g, np.vstack(rows)


def change_in_topic_exploitation(pred, succs) -> float:
    """Sum over successors and topics of |predecessor - successor| exploitation."""
    g, s = _pair(pred, succs)
    return float(np.abs(g[None, :] - s).sum())


def max_positive_change(pred, succs) -> float:
    """Largest total gain of one topic, summed over successors."""
    g, s = _pair(pred, succs)
    return float(np.clip(s - g[None, :], 0, None).sum(axis=0).max())


def max_negative_change(pred, succs) -> float:
    """Largest total loss of one topic (as a magnitude), summed over successors."""
    g, s = _pair(pred, succs)
    return float(np.clip(g[None, :] - s, 0, None).sum(axis=0).max())


@dataclass(frozen=True)
class TransitionChange:
    slot: int
    event_type: str
    predecessor: str
    successors: tuple[str, ...]
    c: float
    mpc: float
    mnc: float
    event_key: tuple = field(default=(), compare=False)


def transition_changes(events: Iterable[TransitionEvent],
                       profiles: Mapping[str, TopicProfile]) -> list[TransitionChange]:
    """c, mpc and mnc for every predecessor of every non-decay event.

    Predecessors or successor sets without a defined profile are skipped.
    """
    out = []
    for ev in events:
        if ev.type == "decay":
            continue
        for pred in ev.predecessors:
            p = profiles.get(pred)
            succ_ids = tuple(s for s in ev.successors_of(pred)
                             if s in profiles and profiles[s].defined)
            if p is None or not p.defined or not succ_ids:
                continue
            succs = [profiles[s] for s in succ_ids]
            out.append(TransitionChange(ev.slot, ev.type, pred, succ_ids,
                                        change_in_topic_exploitation(p, succs),
                                        max_positive_change(p, succs),
                                        max_negative_change(p, succs),
                                        (ev.slot, ev.predecessors)))
    return out


@dataclass(frozen=True)
class EventAverage:
    event_type: str
    period: int
    avg_c: float
    avg_mpc: float
    avg_mnc: float
    n_events: int


def event_type_averages(changes: Iterable[TransitionChange], min_events: int = 10,
                        period_of: Mapping[int, int] | None = None) -> list[EventAverage]:
    """Per (event type, period) means of c, mpc, mnc over predecessor groups.

    A type is reported only if it occurred in at least *min_events* distinct
    events during the period; decays are never reported.  *period_of* maps
    event slot -> period index (default: a single period).
    """
    buckets: dict[tuple[str, int], list[TransitionChange]] = defaultdict(list)
    for ch in changes:
        if ch.event_type == "decay":
            continue
        period = 0 if period_of is None else period_of[ch.slot]
        buckets[(ch.event_type, period)].append(ch)
    out = []
    for (etype, period), rows in sorted(buckets.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        n_events = len({r.event_key or (r.slot, r.predecessor) for r in rows})
        if n_events < min_events:
            continue
        out.append(EventAverage(etype, period,
                                float(np.mean([r.c for r in rows])),
                                float(np.mean([r.mpc for r in rows])),
                                float(np.mean([r.mnc for r in rows])), n_events))
    return out


def topic_divergence(user, group) -> float | None:
    """L1 distance between a user's and a group's topic weights; None if either is undefined."""
    u, g = _weights(user), _weights(group)
    if u is None or g is None:
        return None
    if u.shape != g.shape:
        raise ValueError("profiles have different lengths")
    return float(np.abs(u - g).sum())


def n_bins(width: float) -> int:
    return int(math.ceil(2.0 / width - 1e-9))


def divergence_bin(d, width: float = 0.05):
    """Bin index of divergence value(s) over [0, 2]; 2.0 falls in the last bin."""
    idx = np.floor(np.asarray(d, dtype=float) / width + 1e-9).astype(np.int64)
    return np.clip(idx, 0, n_bins(width) - 1)


@dataclass
class MigrationTable:
    bin_width: float
    join_candidates: np.ndarray
    joiners: np.ndarray
    leave_candidates: np.ndarray
    leavers: np.ndarray
    inactive_joiners: int = 0
    unprofiled_joiners: int = 0
    unprofiled_members: int = 0
    groups_skipped: int = 0

    @classmethod
    def empty(cls, width: float = 0.05) -> "MigrationTable":
        z = lambda: np.zeros(n_bins(width), dtype=np.int64)
        return cls(width, z(), z(), z(), z())

    @staticmethod
    def _ratio(num, den) -> np.ndarray:
        out = np.full(num.shape, np.nan)
        nz = den > 0
        out[nz] = num[nz] / den[nz]
        return out

    @property
    def p_join(self) -> np.ndarray:
        """Per-bin join probability; NaN for bins without candidates."""
        return self._ratio(self.joiners, self.join_candidates)

    @property
    def p_leave(self) -> np.ndarray:
        return self._ratio(self.leavers, self.leave_candidates)

    @property
    def bin_edges(self) -> np.ndarray:
        return np.round(np.arange(n_bins(self.bin_width) + 1) * self.bin_width, 10)

    def merge(self, other: "MigrationTable") -> "MigrationTable":
        return MigrationTable(self.bin_width, self.join_candidates + other.join_candidates,
                              self.joiners + other.joiners,
                              self.leave_candidates + other.leave_candidates,
                              self.leavers + other.leavers,
                              self.inactive_joiners + other.inactive_joiners,
                              self.unprofiled_joiners + other.unprofiled_joiners,
                              self.unprofiled_members + other.unprofiled_members,
                              self.groups_skipped + other.groups_skipped)

    def rows(self) -> list[dict]:
        edges = self.bin_edges
        pj, pl = self.p_join, self.p_leave
        return [{"bin_lo": float(edges[i]), "bin_hi": float(edges[i + 1]),
                 "p_join": None if np.isnan(pj[i]) else float(pj[i]),
                 "n_join_candidates": int(self.join_candidates[i]), "n_joiners": int(self.joiners[i]),
                 "p_leave": None if np.isnan(pl[i]) else float(pl[i]),
                 "n_leave_candidates": int(self.leave_candidates[i]), "n_leavers": int(self.leavers[i])}
                for i in range(len(edges) - 1)]


def migration_between(groups_n: Sequence[Community], groups_n1: Sequence[Community],
                      links: Sequence[Link], group_profiles_n: Mapping[str, TopicProfile],
                      user_profiles_n: Mapping[str, TopicProfile],
                      bin_width: float = 0.05) -> MigrationTable:
    """Join/leave tallies by topic divergence for one slot pair.

    All continuations of a group count as one group: a member is a leaver
    only if absent from every linked successor, and a joiner is anyone in a
    linked successor who was not a member.  Leave candidates are all
    members; join candidates are users active in slot n who are not members.
    Groups without continuation (decay) or without a defined profile are
    skipped.
    """
    table = MigrationTable.empty(bin_width)
    succ_members = {g.id: g.members for g in groups_n1}
    linked: dict[str, list[str]] = defaultdict(list)
    for l in links:
        linked[l.predecessor].append(l.successor)

    active = [u for u, p in user_profiles_n.items() if p.defined]
    active_idx = {u: i for i, u in enumerate(active)}
    mat = np.vstack([user_profiles_n[u].weights for u in active]) if active else None
    all_authors = set(user_profiles_n)

    for g in groups_n:
        gp = group_profiles_n.get(g.id)
        if not linked.get(g.id) or gp is None or not gp.defined:
            table.groups_skipped += 1
            continue
        after = frozenset().union(*(succ_members[s] for s in linked[g.id]))
        if mat is None:
            div_bins = np.empty(0, dtype=np.int64)
        else:
            div_bins = divergence_bin(np.abs(mat - gp.weights[None, :]).sum(axis=1), bin_width)

        for u in g.members:
            i = active_idx.get(u)
            if i is None:
                table.unprofiled_members += 1
                continue
            table.leave_candidates[div_bins[i]] += 1
            if u not in after:
                table.leavers[div_bins[i]] += 1

        cand = np.ones(len(active), dtype=bool)
        for u in g.members:
            if u in active_idx:
                cand[active_idx[u]] = False
        np.add.at(table.join_candidates, div_bins[cand], 1)
        for u in after - g.members:
            i = active_idx.get(u)
            if i is not None:
                table.joiners[div_bins[i]] += 1
            elif u in all_authors:
                table.unprofiled_joiners += 1
            else:
                table.inactive_joiners += 1
    return table


def groups_per_topic(topic_sets: Iterable[GroupTopicSet], n_topics: int) -> np.ndarray:
    counts = np.zeros(n_topics, dtype=np.int64)
    for ts in topic_sets:
        for t in ts.significant_topics:
            counts[t] += 1
    return counts
