"""Group continuation matching and evolution-event classification.

Groups in adjacent slots are linked when their modified Jaccard overlap
reaches a threshold.  Each connected component of the link graph between
slot n and slot n+1 yields one event: decay, constancy, change_size,
split, deletion, merge, addition or split_merge.
"""
from __future__ import annotations

import csv
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from sklearn.base import BaseEstimator

from ._validation import check_fraction, check_positive
from .cpm import Community

EVENT_TYPES = ("split", "deletion", "merge", "addition", "split_merge",
               "decay", "constancy", "change_size")
# events along which a group keeps its identity in a timeline
_CONTINUING = frozenset({"constancy", "change_size", "addition", "deletion"})


def modified_jaccard(a: frozenset, b: frozenset) -> float:
    """max(|A&B|/|A|, |A&B|/|B|); 0 for empty input."""
    if not a or not b:
        return 0.0
    inter = len(a & b)
    return max(inter / len(a), inter / len(b))


@dataclass(frozen=True)
class Link:
    predecessor: str
    successor: str
    similarity: float
    intersection: int


@dataclass(frozen=True)
class TransitionEvent:
    slot: int
    type: str
    predecessors: tuple[str, ...]
    successors: tuple[str, ...]
    links: tuple[tuple[str, str], ...] = field(default=(), compare=False)

    def successors_of(self, pred: str) -> list[str]:
        return [s for p, s in self.links if p == pred]


@dataclass(frozen=True)
class GroupTimeline:
    groups: tuple[str, ...]
    start_slot: int
    stable: bool

    @property
    def id(self) -> str:
        return self.groups[0]

    def __len__(self) -> int:
        return len(self.groups)

    def to_dict(self) -> dict:
        return {"id": self.id, "start_slot": self.start_slot, "length": len(self),
                "stable": self.stable, "groups": list(self.groups)}


def match_continuations(groups_n: Sequence[Community], groups_n1: Sequence[Community],
                        threshold: float = 0.3) -> list[Link]:
    """Links (A, B) with modified Jaccard >= threshold, sorted by ids."""
    threshold = check_fraction(threshold, "threshold")
    by_member: dict[str, list[Community]] = defaultdict(list)
    for b in groups_n1:
        for m in b.members:
            by_member[m].append(b)
    lookup = {b.id: b for b in groups_n1}
    links = []
    for a in groups_n:
        shared: Counter = Counter()
        for m in a.members:
            for b in by_member.get(m, ()):
                shared[b.id] += 1
        for bid, inter in shared.items():
            b = lookup[bid]
            mj = max(inter / len(a.members), inter / len(b.members))
            if mj >= threshold:
                links.append(Link(a.id, bid, mj, inter))
    return sorted(links, key=lambda l: (_id_key(l.predecessor), _id_key(l.successor)))


def _id_key(gid: str):
    slot, _, ordinal = gid.partition(":")
    try:
        return (int(slot), int(ordinal))
    except ValueError:
        return (0, gid)


def _main(candidates: Sequence[str], inter: Mapping[str, int], size: Mapping[str, int]) -> str:
    return min(candidates, key=lambda g: (-inter[g], -size[g], _id_key(g)))


def classify_component(preds: Sequence[str], succs: Sequence[str], links: Sequence[Link],
                       size: Mapping[str, int], *, size_ratio: float = 5.0,
                       size_epsilon: float = 0.1, slot: int = 0) -> TransitionEvent:
    """Event type for one connected component of continuation links."""
    preds = tuple(sorted(preds, key=_id_key))
    succs = tuple(sorted(succs, key=_id_key))
    pairs = tuple((l.predecessor, l.successor) for l in links)
    if not succs:
        etype = "decay"
    elif len(preds) == 1 and len(succs) == 1:
        a, b = preds[0], succs[0]
        change = abs(size[b] - size[a]) / size[a]
        etype = "constancy" if change <= size_epsilon else "change_size"
    elif len(preds) == 1:
        inter = {l.successor: l.intersection for l in links}
        main = _main(succs, inter, size)
        small = all(size[main] >= size_ratio * size[s] for s in succs if s != main)
        etype = "deletion" if small else "split"
    elif len(succs) == 1:
        inter = {l.predecessor: l.intersection for l in links}
        main = _main(preds, inter, size)
        small = all(size[main] >= size_ratio * size[p] for p in preds if p != main)
        etype = "addition" if small else "merge"
    else:
        etype = "split_merge"
    return TransitionEvent(slot, etype, preds, succs, pairs)


def classify_transitions(groups_n: Sequence[Community], groups_n1: Sequence[Community],
                         links: Sequence[Link], *, size_ratio: float = 5.0,
                         size_epsilon: float = 0.1, slot: int | None = None) -> list[TransitionEvent]:
    """One event per connected component that contains a slot-n group."""
    if slot is None:
        slot = groups_n1[0].slot if groups_n1 else (groups_n[0].slot + 1 if groups_n else 0)
    size = {g.id: len(g) for g in list(groups_n) + list(groups_n1)}
    adj: dict[str, set[str]] = defaultdict(set)
    for l in links:
        adj["p" + l.predecessor].add("s" + l.successor)
        adj["s" + l.successor].add("p" + l.predecessor)
    seen: set[str] = set()
    events = []
    for g in sorted(groups_n, key=lambda c: _id_key(c.id)):
        root = "p" + g.id
        if root in seen:
            continue
        stack, comp = [root], []
        seen.add(root)
        while stack:
            node = stack.pop()
            comp.append(node)
            for nxt in adj[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        preds = [n[1:] for n in comp if n[0] == "p"]
        succs = [n[1:] for n in comp if n[0] == "s"]
        pset = set(preds)
        comp_links = [l for l in links if l.predecessor in pset]
        events.append(classify_component(preds, succs, comp_links, size, size_ratio=size_ratio,
                                         size_epsilon=size_epsilon, slot=slot))
    return events


def build_timelines(slot_groups: Sequence[Sequence[Community]], links_by_pair: Sequence[Sequence[Link]],
                    events: Iterable[TransitionEvent], stability_min_slots: int = 3) -> list[GroupTimeline]:
    """Chain groups through their strongest mutual continuation links.

    A chain passes from A to B only when B is A's strongest outgoing link,
    A is B's strongest incoming link, and their event preserves identity
    (constancy, change_size, addition, deletion).  Ties break on larger
    intersection, then on lexicographic id.
    """
    etype = {}
    for ev in events:
        for p in ev.predecessors:
            etype[p] = ev.type
    nxt: dict[str, str] = {}
    for links in links_by_pair:
        best_out: dict[str, Link] = {}
        best_in: dict[str, Link] = {}
        for l in links:
            key = (-l.similarity, -l.intersection)
            cur = best_out.get(l.predecessor)
            if cur is None or key + (_id_key(l.successor),) < (-cur.similarity, -cur.intersection, _id_key(cur.successor)):
                best_out[l.predecessor] = l
            cur = best_in.get(l.successor)
            if cur is None or key + (_id_key(l.predecessor),) < (-cur.similarity, -cur.intersection, _id_key(cur.predecessor)):
                best_in[l.successor] = l
        for pred, l in best_out.items():
            if best_in.get(l.successor) is l and etype.get(pred) in _CONTINUING:
                nxt[pred] = l.successor
    has_prev = set(nxt.values())
    timelines = []
    for groups in slot_groups:
        for g in sorted(groups, key=lambda c: _id_key(c.id)):
            if g.id in has_prev:
                continue
            chain = [g.id]
            while chain[-1] in nxt:
                chain.append(nxt[chain[-1]])
            timelines.append(GroupTimeline(tuple(chain), g.slot, len(chain) >= stability_min_slots))
    return timelines


def event_census(events: Iterable[TransitionEvent]) -> dict[str, int]:
    counts = dict.fromkeys(EVENT_TYPES, 0)
    for ev in events:
        counts[ev.type] += 1
    return counts


class SGCITracker(BaseEstimator):
    """Track groups across slots and label their transitions.

    ``fit`` takes one sequence of Community per slot, in slot order.

    Parameters
    ----------
    threshold : float, default=0.3
        Minimum modified Jaccard overlap for a continuation link.
    size_ratio : float, default=5
        Factor by which the main group must exceed every other group for a
        split/merge to count as deletion/addition.
    size_epsilon : float, default=0.1
        Largest relative size change still counted as constancy.
    stability_min_slots : int, default=3
        Minimum timeline length for a stable group.
    """

    def __init__(self, threshold: float = 0.3, size_ratio: float = 5.0,
                 size_epsilon: float = 0.1, stability_min_slots: int = 3):
        self.threshold = threshold
        self.size_ratio = size_ratio
        self.size_epsilon = size_epsilon
        self.stability_min_slots = stability_min_slots

    def fit(self, X, y=None):
        check_fraction(self.threshold, "threshold")
        check_positive(self.size_ratio, "size_ratio")
        if self.size_epsilon < 0:
            raise ValueError("size_epsilon must be non-negative")
        if int(self.stability_min_slots) < 1:
            raise ValueError("stability_min_slots must be >= 1")
        slot_groups = [list(groups) for groups in X]
        self.links_, self.events_ = [], []
        for n in range(len(slot_groups) - 1):
            links = match_continuations(slot_groups[n], slot_groups[n + 1], self.threshold)
            self.links_.append(links)
            slot = _slot_of(slot_groups, n + 1)
            self.events_.extend(classify_transitions(
                slot_groups[n], slot_groups[n + 1], links, size_ratio=self.size_ratio,
                size_epsilon=self.size_epsilon, slot=slot))
        self.timelines_ = build_timelines(slot_groups, self.links_, self.events_,
                                          int(self.stability_min_slots))
        self.census_ = event_census(self.events_)
        return self

    def continuation_map(self) -> dict[str, list[str]]:
        """Predecessor id -> linked successor ids."""
        out: dict[str, list[str]] = defaultdict(list)
        for links in self.links_:
            for l in links:
                out[l.predecessor].append(l.successor)
        return dict(out)


def _slot_of(slot_groups, n: int) -> int:
    if slot_groups[n]:
        return slot_groups[n][0].slot
    for m in range(n - 1, -1, -1):
        if slot_groups[m]:
            return slot_groups[m][0].slot + (n - m)
    return n


def write_events(events: Iterable[TransitionEvent], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["slot", "type", "predecessor_ids", "successor_ids"])
        for ev in events:
            writer.writerow([ev.slot, ev.type, "|".join(ev.predecessors), "|".join(ev.successors)])
    return path


def write_timelines(timelines: Iterable[GroupTimeline], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = [t.to_dict() for t in timelines]
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    return path
