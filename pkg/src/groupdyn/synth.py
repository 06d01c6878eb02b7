"""Synthetic corpora with planted groups, evolution events, topics and migrations.

The generator writes ordinary corpus records plus a ledger of every planted
fact, so downstream stages can be checked against known truth.  Within a
slot, planted group members all reply to each other's posts (subject to the
tie density), so each planted group is a directed clique with reciprocal
arcs.  Messages of slot s fall on days 6s+1 .. 6s+5 (for the default
geometry), never on a day shared with a neighbouring slot.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path
from typing import Any

import numpy as np

from .corpus import Message, extract_mention, write_corpus
from .metrics import MigrationTable, divergence_bin, n_bins

LOG = logging.getLogger(__name__)

EVENT_KINDS = ("merge", "addition", "split", "deletion", "decay")
_CONSONANTS = "bdgklmnprtvz"
_VOWELS = "aiou"


class InfeasibleScript(ValueError):
    """The script cannot realize its planted structure."""


@dataclass
class GroupSpec:
    name: str
    size: int
    start: int = 0
    end: int | None = None
    density: float = 1.0
    topic: Any = 0
    churn: float = 0.0


@dataclass
class ScenarioScript:
    slots: int
    groups: list[GroupSpec] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    migrations: list[dict] = field(default_factory=list)
    seed: int = 42
    start: str = "2010-01-04"
    window_days: int = 7
    step_days: int = 6
    k: int = 5
    n_topics: int = 5
    vocab_size: int = 300
    words_per_message: int = 25
    noise_users: int = 20
    noise_rate: float = 0.02
    mention_rate: float = 0.2
    zipf_exponent: float = 1.0

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioScript":
        data = dict(data)
        data["groups"] = [g if isinstance(g, GroupSpec) else GroupSpec(**g) for g in data.get("groups", [])]
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ScenarioScript":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return asdict(self)


def pseudo_word(i: int) -> str:
    """Distinct lowercase letter-only word for index *i* (no stop words, stable under stemming)."""
    syll = [c + v for c in _CONSONANTS for v in _VOWELS]
    parts = []
    for _ in range(3):
        parts.append(syll[i % len(syll)])
        i //= len(syll)
    if i:
        raise ValueError("vocabulary too large for pseudo words")
    return "".join(parts)


def topic_word_matrix(n_topics: int, vocab_size: int, exponent: float = 1.0) -> np.ndarray:
    """Disjoint vocabulary blocks per topic with Zipf-like weights inside each block."""
    if vocab_size < n_topics:
        raise InfeasibleScript("vocab_size must be at least n_topics")
    phi = np.zeros((n_topics, vocab_size))
    blocks = np.array_split(np.arange(vocab_size), n_topics)
    for t, block in enumerate(blocks):
        w = 1.0 / np.arange(1, block.size + 1) ** exponent
        phi[t, block] = w / w.sum()
    return phi


def _topic_dist(topic, n_topics: int) -> np.ndarray:
    if isinstance(topic, (int, np.integer)):
        if not 0 <= topic < n_topics:
            raise InfeasibleScript(f"topic {topic} out of range")
        out = np.zeros(n_topics)
        out[int(topic)] = 1.0
        return out
    arr = np.asarray(topic, dtype=float)
    if arr.shape != (n_topics,) or np.any(arr < 0) or arr.sum() <= 0:
        raise InfeasibleScript(f"bad topic distribution {topic!r}")
    return arr / arr.sum()


def clique_probability(size: int, density: float, k: int, trials: int = 200, seed: int = 0) -> float:
    """Monte Carlo chance that a random tie graph on *size* members percolates into one k-community."""
    from .cpm import detect
    from .graph import Snapshot

    if density >= 1.0:
        return 1.0 if size >= k else 0.0
    rng = np.random.default_rng(seed)
    names = [f"v{i:03d}" for i in range(size)]
    hits = 0
    for _ in range(trials):
        arcs = {}
        for i in range(size):
            for j in range(i + 1, size):
                if rng.random() < density:
                    arcs[(names[i], names[j])] = 1
                    arcs[(names[j], names[i])] = 1
        comms = detect(Snapshot(0, arcs), k, "undirected")
        hits += any(len(c) == size for c in comms)
    return hits / trials


class _Builder:
    def __init__(self, script: ScenarioScript):
        self.s = script
        self.rng = np.random.default_rng(script.seed)
        self.phi = topic_word_matrix(script.n_topics, script.vocab_size, script.zipf_exponent)
        self.words = [pseudo_word(i) for i in range(script.vocab_size)]
        self.messages: list[Message] = []
        self.labels: dict[str, int] = {}
        self.n_posts = self.n_comments = 0
        self.user_counter: dict[str, int] = {}
        self.start = date.fromisoformat(script.start)
        self.authored: list[dict[str, int]] = [dict() for _ in range(script.slots)]
        self.slot_posts: list[list[Message]] = [[] for _ in range(script.slots)]
        self.slot_of: dict[str, int] = {}
        self._cdf = np.cumsum(self.phi, axis=1)

    def new_user(self, prefix: str) -> str:
        n = self.user_counter.get(prefix, 0) + 1
        self.user_counter[prefix] = n
        return f"{prefix}{n:05d}"

    def ts(self, slot: int, lo: float, hi: float) -> datetime:
        # fraction [lo, hi) of the days that belong to this slot only
        overlap = self.s.window_days - self.s.step_days
        first = self.s.step_days * slot + overlap
        private = self.s.step_days - overlap
        seconds = self.rng.integers(int(lo * private * 86400), int(hi * private * 86400))
        base = datetime.combine(self.start, time(0), tzinfo=timezone.utc)
        return base + timedelta(days=first, seconds=int(seconds))

    def _record(self, slot: int, msg: Message, topic: int) -> None:
        self.messages.append(msg)
        self.labels[msg.id] = topic
        self.slot_of[msg.id] = slot
        self.authored[slot][msg.author] = self.authored[slot].get(msg.author, 0) + 1

    def text(self, topic: int) -> str:
        cdf = self._cdf[topic]
        idx = np.minimum(np.searchsorted(cdf, self.rng.random(self.s.words_per_message) * cdf[-1], side="right"),
                         self.s.vocab_size - 1)
        return " ".join(self.words[i] for i in idx)

    def label(self, dist: np.ndarray) -> int:
        if dist.max() == 1.0:
            return int(dist.argmax())
        cdf = np.cumsum(dist)
        return int(min(np.searchsorted(cdf, self.rng.random() * cdf[-1], side="right"), dist.size - 1))

    def post(self, slot: int, author: str, topic: int) -> Message:
        self.n_posts += 1
        pid = f"p{self.n_posts:07d}"
        top = np.argsort(-self.phi[topic], kind="stable")[:2]
        msg = Message(pid, author, self.ts(slot, 0.0, 0.4), "post", pid, None, self.text(topic),
                      tuple(self.words[i] for i in top))
        self._record(slot, msg, topic)
        self.slot_posts[slot].append(msg)
        return msg

    def comment(self, slot: int, author: str, post: Message, topic: int,
                parent: Message | None = None, mention: str | None = None) -> Message:
        self.n_comments += 1
        cid = f"c{self.n_comments:07d}"
        body = self.text(topic)
        if mention:
            body = f"@{mention} {body}"
        msg = Message(cid, author, self.ts(slot, 0.4, 1.0), "comment", post.id,
                      parent.id if parent else None, body, (), extract_mention(body))
        self._record(slot, msg, topic)
        return msg


def _validate(script: ScenarioScript) -> None:
    if script.slots < 1:
        raise InfeasibleScript("slots must be positive")
    if 2 * script.step_days <= script.window_days or script.step_days > script.window_days:
        raise InfeasibleScript("slot geometry must leave days private to each slot")
    names = [g.name for g in script.groups]
    if len(set(names)) != len(names):
        raise InfeasibleScript("duplicate group names")
    for g in script.groups:
        if g.size < script.k:
            raise InfeasibleScript(f"group {g.name}: size {g.size} < k={script.k}")
        if not 0 < g.density <= 1:
            raise InfeasibleScript(f"group {g.name}: density must be in (0, 1]")
        if not 0 <= g.churn < 0.5:
            raise InfeasibleScript(f"group {g.name}: churn must be in [0, 0.5)")
        p = clique_probability(g.size, g.density, script.k, seed=script.seed)
        if p < 0.99:
            raise InfeasibleScript(
                f"group {g.name}: density {g.density} forms a {script.k}-clique community "
                f"with probability {p:.3f} < 0.99")
    for ev in script.events:
        if ev.get("type") not in EVENT_KINDS:
            raise InfeasibleScript(f"unknown event type {ev.get('type')!r}")
        if not 1 <= int(ev.get("slot", -1)) < script.slots:
            raise InfeasibleScript(f"event slot out of range: {ev}")
    for mig in script.migrations:
        if mig.get("kind") not in ("join", "leave"):
            raise InfeasibleScript(f"bad migration kind: {mig}")
        if not 0 <= mig["slot"] < script.slots - 1:
            raise InfeasibleScript(f"migration slot must leave a following slot: {mig}")
        if not 0 <= float(mig.get("divergence", 0)) < 2 or not 0 <= float(mig.get("rate", 0)) <= 1:
            raise InfeasibleScript(f"bad migration divergence/rate: {mig}")


def generate(script: ScenarioScript) -> tuple[list[Message], dict]:
    """Emit a corpus realizing *script* and the ledger of planted facts."""
    _validate(script)
    b = _Builder(script)
    S, T = script.slots, script.n_topics

    base: dict[str, list[str]] = {}
    topics: dict[str, np.ndarray] = {}
    specs = {g.name: g for g in script.groups}
    alive: set[str] = set()
    planted_events: list[dict] = []
    continuations: list[list[tuple[str, str]]] = []
    membership: list[dict[str, list[str]]] = []
    planted_group_msgs: list[dict[str, list[str]]] = []
    mig_records = []
    churn_of = {g.name: g.churn for g in script.groups}
    density_of = {g.name: g.density for g in script.groups}
    noise_pool = [b.new_user("x") for _ in range(script.noise_users)]

    def spawn(name: str, members: list[str], topic, churn=0.0, density=1.0):
        base[name] = list(members)
        topics[name] = _topic_dist(topic, T)
        churn_of.setdefault(name, churn)
        density_of.setdefault(name, density)
        alive.add(name)

    def require(name, slot):
        if name not in alive:
            raise InfeasibleScript(f"slot {slot}: group {name!r} is not alive")

    events_at: dict[int, list[dict]] = {}
    for ev in script.events:
        events_at.setdefault(int(ev["slot"]), []).append(ev)
    migs_at: dict[int, list[dict]] = {}
    for mig in script.migrations:
        migs_at.setdefault(int(mig["slot"]), []).append(mig)
    pending_leave: dict[int, list[tuple[str, list[str]]]] = {}
    pending_join: dict[int, list[tuple[str, list[str]]]] = {}

    for slot in range(S):
        links: list[tuple[str, str]] = []
        previous = set(alive)
        consumed: set[str] = set()
        for name, spec in specs.items():
            if spec.start == slot:
                spawn(name, [b.new_user("u") for _ in range(spec.size)], spec.topic, spec.churn, spec.density)
            if spec.end is not None and spec.end == slot and name in alive:
                alive.discard(name)
                consumed.add(name)
                planted_events.append({"slot": slot, "type": "decay", "predecessors": [name], "successors": []})
        for ev in events_at.get(slot, []):
            kind = ev["type"]
            if kind == "merge":
                for src in ev["sources"]:
                    require(src, slot)
                members = [u for src in ev["sources"] for u in base[src]]
                for src in ev["sources"]:
                    alive.discard(src)
                    consumed.add(src)
                spawn(ev["target"], members, ev.get("topic", int(np.argmax(topics[ev["sources"][0]]))),
                      ev.get("churn", 0.0))
                links += [(src, ev["target"]) for src in ev["sources"]]
                planted_events.append({"slot": slot, "type": "merge", "predecessors": list(ev["sources"]),
                                       "successors": [ev["target"]]})
            elif kind == "addition":
                require(ev["target"], slot)
                for src in ev["sources"]:
                    require(src, slot)
                    base[ev["target"]] += base[src]
                    alive.discard(src)
                    consumed.add(src)
                if "topic" in ev:
                    topics[ev["target"]] = _topic_dist(ev["topic"], T)
                links += [(src, ev["target"]) for src in ev["sources"]]
                planted_events.append({"slot": slot, "type": "addition",
                                       "predecessors": sorted(list(ev["sources"]) + [ev["target"]]),
                                       "successors": [ev["target"]]})
            elif kind == "split":
                src = ev["source"]
                require(src, slot)
                members, pos, outs = base[src], 0, []
                for tgt in ev["targets"]:
                    if tgt["size"] < script.k:
                        raise InfeasibleScript(f"split part {tgt['name']} smaller than k")
                    spawn(tgt["name"], members[pos:pos + tgt["size"]],
                          tgt.get("topic", int(np.argmax(topics[src]))), tgt.get("churn", 0.0))
                    pos += tgt["size"]
                    outs.append(tgt["name"])
                if pos > len(members):
                    raise InfeasibleScript(f"split of {src} exceeds its size")
                alive.discard(src)
                consumed.add(src)
                links += [(src, o) for o in outs]
                planted_events.append({"slot": slot, "type": "split", "predecessors": [src], "successors": outs})
            elif kind == "deletion":
                src = ev["source"]
                require(src, slot)
                n = int(ev["size"])
                if n < script.k or len(base[src]) - n < script.k:
                    raise InfeasibleScript(f"deletion from {src} leaves a part smaller than k")
                detached = base[src][-n:]
                base[src] = base[src][:-n]
                spawn(ev["target"], detached, ev.get("topic", int(np.argmax(topics[src]))), ev.get("churn", 0.0))
                links += [(src, src), (src, ev["target"])]
                consumed.add(src)
                planted_events.append({"slot": slot, "type": "deletion", "predecessors": [src],
                                       "successors": sorted([src, ev["target"]])})
            elif kind == "decay":
                require(ev["source"], slot)
                alive.discard(ev["source"])
                consumed.add(ev["source"])
                planted_events.append({"slot": slot, "type": "decay", "predecessors": [ev["source"]],
                                       "successors": []})
        for name, leavers in pending_leave.pop(slot, []):
            if name in alive:
                base[name] = [u for u in base[name] if u not in set(leavers)]
        for name, joiners in pending_join.pop(slot, []):
            if name in alive:
                base[name] += joiners
        if slot > 0:
            links += [(g, g) for g in sorted(previous & alive) if g not in consumed]
            continuations.append(sorted(set(links)))

        present: dict[str, list[str]] = {}
        for name in sorted(alive):
            members = list(base[name])
            n_out = int(round(churn_of.get(name, 0.0) * len(members)))
            if n_out:
                out = set(b.rng.choice(len(members), size=n_out, replace=False).tolist())
                members = [u for i, u in enumerate(members) if i not in out]
            present[name] = members

        for mig in migs_at.get(slot, []):
            name = mig["group"]
            require(name, slot)
            n, rate, d = int(mig["candidates"]), float(mig["rate"]), float(mig["divergence"])
            k_move = int(round(rate * n))
            off = int((np.argmax(topics[name]) + 1) % T)
            users = [b.new_user("l" if mig["kind"] == "leave" else "j") for _ in range(n)]
            movers = users[:k_move]
            if mig["kind"] == "leave":
                base[name] += users
                present[name] += users
                pending_leave.setdefault(slot + 1, []).append((name, movers))
            else:
                pending_join.setdefault(slot + 1, []).append((name, movers))
            mig_records.append({**mig, "users": users, "movers": movers, "off_topic": off})
        membership.append({g: sorted(m) for g, m in present.items()})

        group_msgs = _emit_slot(b, slot, present, topics, density_of, script)
        planted_group_msgs.append(group_msgs)
        _emit_migration_posts(b, slot, topics, mig_records, T)
        _emit_noise(b, slot, noise_pool, script, group_msgs)

    msgs = sorted(b.messages, key=lambda m: (m.timestamp, m.id))
    truth = _migration_truth(b, membership, continuations, planted_group_msgs, script)
    users = sorted({m.author for m in msgs})
    ledger = {
        "seed": script.seed,
        "script": script.to_dict(),
        "slots": S,
        "membership": membership,
        "events": planted_events,
        "continuations": [[list(l) for l in links] for links in continuations],
        "group_topics": {g: topics[g].tolist() for g in sorted(topics)},
        "message_topics": dict(sorted(b.labels.items())),
        "words": b.words,
        "topic_word": b.phi.tolist(),
        "migrations": mig_records,
        "migration_truth": truth,
        "slot_config": slot_config_for(script),
        "group_messages": planted_group_msgs,
        "counts": {"users": len(users), "posts": b.n_posts, "comments": b.n_comments,
                   "messages": len(msgs), "bloggers": len({m.author for m in msgs if m.is_post}),
                   "tags": sum(len(m.tags) for m in msgs)},
    }
    return msgs, ledger


def _emit_slot(b: _Builder, slot: int, present: dict[str, list[str]], topics, density_of, script):
    """Posts and reciprocal replies inside each planted group.

    Returns, per group, the replies exchanged between members plus the
    members' posts that received at least one of them.
    """
    group_msgs: dict[str, list[str]] = {}
    for name in sorted(present):
        members = present[name]
        dist = topics[name]
        posts = {u: b.post(slot, u, b.label(dist)) for u in members}
        ids = []
        commented: set[str] = set()
        ties = {}
        for i, u in enumerate(members):
            for v in members[i + 1:]:
                ties[(u, v)] = ties[(v, u)] = bool(b.rng.random() < density_of.get(name, 1.0))
        replied: dict[tuple[str, str], Message] = {}
        deferred = []
        for u in members:
            for v in members:
                if u == v or not ties[(u, v)]:
                    continue
                if script.mention_rate > 0 and b.rng.random() < script.mention_rate:
                    deferred.append((v, u))
                    continue
                c = b.comment(slot, v, posts[u], b.label(dist))
                replied[(v, u)] = c
                ids.append(c.id)
                commented.add(u)
        for v, u in deferred:
            # reply to u's comment under a third member's post, addressing u by name
            hosts = [w for w in members if w not in (u, v) and (u, w) in replied]
            if hosts:
                w = hosts[int(b.rng.integers(len(hosts)))]
                c = b.comment(slot, v, posts[w], b.label(dist), parent=replied[(u, w)], mention=u)
                commented.add(w)
            else:
                c = b.comment(slot, v, posts[u], b.label(dist))
                commented.add(u)
            ids.append(c.id)
        ids += [posts[u].id for u in members if u in commented]
        group_msgs[name] = sorted(ids)
    return group_msgs


def _emit_migration_posts(b: _Builder, slot, topics, mig_records, T):
    """Solo posts steering each migration candidate to its planted divergence.

    A leave candidate with a messages in its group adds a*d/(2-d) off-topic
    posts; a join candidate writes 20 posts, a d/2 share of them off-topic.
    """
    for rec in mig_records:
        if rec["slot"] != slot:
            continue
        d, name, off = float(rec["divergence"]), rec["group"], rec["off_topic"]
        main = int(np.argmax(topics[name]))
        for u in rec["users"]:
            if rec["kind"] == "leave":
                a = b.authored[slot].get(u, 0)
                for _ in range(int(round(a * d / (2.0 - d)))):
                    b.post(slot, u, off)
            else:
                n_off = int(round(20 * d / 2.0))
                for i in range(20):
                    b.post(slot, u, off if i < n_off else main)


def _emit_noise(b: _Builder, slot, noise_pool, script, group_msgs):
    """Background replies from the noise pool to random posts of the slot."""
    n_intra = sum(len(ids) for ids in group_msgs.values())
    n_noise = int(round(script.noise_rate * n_intra))
    posts = b.slot_posts[slot]
    if n_noise == 0 or not posts or not noise_pool:
        return
    for _ in range(n_noise):
        author = noise_pool[int(b.rng.integers(len(noise_pool)))]
        post = posts[int(b.rng.integers(len(posts)))]
        b.comment(slot, author, post, int(b.rng.integers(script.n_topics)))


def _migration_truth(b: _Builder, membership, continuations, group_msgs, script) -> dict:
    """Join/leave tallies from planted membership, continuations and message labels."""
    width = 0.05
    T = script.n_topics
    table = MigrationTable.empty(width)
    labels_by_author: list[dict[str, list[int]]] = [dict() for _ in range(script.slots)]
    for m in b.messages:
        labels_by_author[b.slot_of[m.id]].setdefault(m.author, []).append(b.labels[m.id])
    for n, links in enumerate(continuations):
        profiles = {u: np.bincount(t, minlength=T) / len(t) for u, t in labels_by_author[n].items()}
        succ: dict[str, list[str]] = {}
        for p, s in links:
            succ.setdefault(p, []).append(s)
        for g, members in membership[n].items():
            labels = [b.labels[i] for i in group_msgs[n].get(g, [])]
            if g not in succ or not labels:
                continue
            gp = np.bincount(labels, minlength=T) / len(labels)
            after = set().union(*(membership[n + 1].get(s, []) for s in succ[g]))
            mem = set(members)
            for u in members:
                if u in profiles:
                    i = int(divergence_bin(np.abs(profiles[u] - gp).sum(), width))
                    table.leave_candidates[i] += 1
                    table.leavers[i] += u not in after
            for u, prof in profiles.items():
                if u not in mem:
                    i = int(divergence_bin(np.abs(prof - gp).sum(), width))
                    table.join_candidates[i] += 1
                    table.joiners[i] += u in after
            table.inactive_joiners += sum(1 for u in after - mem if u not in profiles)
    return {"bin_width": width, "n_bins": n_bins(width),
            "join_candidates": table.join_candidates.tolist(), "joiners": table.joiners.tolist(),
            "leave_candidates": table.leave_candidates.tolist(), "leavers": table.leavers.tolist(),
            "inactive_joiners": table.inactive_joiners}


def slot_config_for(script: ScenarioScript) -> dict:
    """Slot geometry whose slots coincide with the script's slots."""
    start = date.fromisoformat(script.start)
    end = start + timedelta(days=script.step_days * (script.slots - 1) + script.window_days - 1)
    return {"range_start": start.isoformat(), "range_end": end.isoformat(),
            "window_days": script.window_days, "step_days": script.step_days}


def write_outputs(messages, ledger: dict, corpus_path, ledger_path) -> None:
    write_corpus(messages, corpus_path)
    path = Path(ledger_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(ledger, sort_keys=True) + "\n", encoding="utf-8")
