"""Overlapping communities by k-clique percolation, directed or undirected.

A directed k-clique is a set of k nodes where every pair is joined by at
least one arc and the one-way arcs among them contain no cycle (reciprocal
pairs impose no order).  Communities are unions of k-cliques that are
connected through chains of cliques sharing k-1 nodes.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_k, check_mode, check_snapshot
from .graph import Snapshot

MODES = ("directed", "undirected")


@dataclass(frozen=True, order=True)
class KClique:
    nodes: tuple[str, ...]

    @classmethod
    def of(cls, nodes: Iterable[str]) -> "KClique":
        return cls(tuple(sorted(nodes)))

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class Community:
    slot: int
    ordinal: int
    members: frozenset[str]
    k: int

    @property
    def id(self) -> str:
        return f"{self.slot}:{self.ordinal}"

    def __len__(self) -> int:
        return len(self.members)

    def to_dict(self) -> dict:
        return {"id": self.id, "k": self.k, "members": sorted(self.members)}


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)

    def groups(self) -> list[list[int]]:
        out: dict[int, list[int]] = defaultdict(list)
        for i in range(len(self.parent)):
            out[self.find(i)].append(i)
        return list(out.values())


def maximal_cliques(adj: dict[str, set[str]]) -> list[frozenset[str]]:
    """All maximal cliques of an undirected graph (Bron-Kerbosch with pivoting)."""
    found: list[frozenset[str]] = []

    def expand(r: list[str], p: set[str], x: set[str]) -> None:
        if not p and not x:
            found.append(frozenset(r))
            return
        pivot = max(sorted(p | x), key=lambda u: len(adj[u] & p))
        for v in sorted(p - adj[pivot]):
            expand(r + [v], p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    expand([], set(adj), set())
    return sorted(found, key=lambda c: sorted(c))


def one_way_acyclic(nodes: Iterable[str], arcs) -> bool:
    """True when the single-direction arcs among *nodes* admit a topological order."""
    nodes = list(nodes)
    indeg = {n: 0 for n in nodes}
    out: dict[str, list[str]] = defaultdict(list)
    for u, v in combinations(nodes, 2):
        fwd, back = (u, v) in arcs, (v, u) in arcs
        if fwd and not back:
            out[u].append(v)
            indeg[v] += 1
        elif back and not fwd:
            out[v].append(u)
            indeg[u] += 1
    queue = [n for n in nodes if indeg[n] == 0]
    seen = 0
    while queue:
        n = queue.pop()
        seen += 1
        for m in out[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                queue.append(m)
    return seen == len(nodes)


def is_clique(nodes: Sequence[str], snapshot: Snapshot, mode: str = "directed") -> bool:
    arcs = snapshot.arcs
    for u, v in combinations(nodes, 2):
        if (u, v) not in arcs and (v, u) not in arcs:
            return False
    return mode == "undirected" or one_way_acyclic(nodes, arcs)


def _blocks(snapshot: Snapshot, k: int, mode: str) -> list[frozenset[str]]:
    """Node sets whose every k-subset is a valid k-clique, jointly covering all k-cliques."""
    blocks = []
    for clique in maximal_cliques(snapshot.neighbors()):
        if len(clique) < k:
            continue
        if mode == "undirected" or one_way_acyclic(clique, snapshot.arcs):
            blocks.append(clique)
            continue
        for sub in combinations(sorted(clique), k):
            if one_way_acyclic(sub, snapshot.arcs):
                blocks.append(frozenset(sub))
    return blocks


def enumerate_k_cliques(snapshot: Snapshot, k: int, mode: str = "directed") -> list[KClique]:
    """Every k-node subset satisfying the clique rule of *mode*, sorted."""
    check_k(k)
    check_mode(mode)
    out: set[KClique] = set()
    for block in _blocks(snapshot, k, mode):
        for sub in combinations(sorted(block), k):
            out.add(KClique(sub))
    return sorted(out)


def _components(sets: Sequence[frozenset[str]], k: int) -> list[frozenset[str]]:
    """Union of each connected group of *sets*, two sets linked when they share >= k-1 nodes."""
    uf = _UnionFind(len(sets))
    by_face: dict[tuple[str, ...], int] = {}
    for i, s in enumerate(sets):
        for face in combinations(sorted(s), k - 1):
            j = by_face.setdefault(face, i)
            if j != i:
                uf.union(i, j)
    return [frozenset().union(*(sets[i] for i in idx)) for idx in uf.groups()]


def percolate(cliques: Iterable[KClique], k: int, slot: int = 0) -> list[Community]:
    """Communities from explicit k-cliques: components of the shared-(k-1)-nodes relation."""
    cliques = sorted(set(cliques))
    if any(len(c) != k for c in cliques):
        raise ValueError("all cliques must have exactly k nodes")
    uf = _UnionFind(len(cliques))
    by_face: dict[tuple[str, ...], int] = {}
    for i, c in enumerate(cliques):
        for face in combinations(c.nodes, k - 1):
            j = by_face.setdefault(face, i)
            if j != i:
                uf.union(i, j)
    members = [frozenset().union(*(cliques[i].nodes for i in idx)) for idx in uf.groups()]
    return _as_communities(members, k, slot)


def _as_communities(member_sets: Iterable[frozenset[str]], k: int, slot: int) -> list[Community]:
    ordered = sorted(set(member_sets), key=lambda m: sorted(m))
    return [Community(slot, i, m, k) for i, m in enumerate(ordered)]


def detect(snapshot: Snapshot, k: int = 5, mode: str = "directed") -> list[Community]:
    check_k(k)
    check_mode(mode)
    blocks = _blocks(snapshot, k, mode)
    return _as_communities(_components(blocks, k), k, snapshot.slot_index)


class CliquePercolation(BaseEstimator):
    """k-clique percolation on a slot snapshot.

    Parameters
    ----------
    k : int, default=5
        Clique size; also the minimum community size.
    mode : {"directed", "undirected"}, default="directed"

    Attributes
    ----------
    communities_ : list of Community
    membership_ : dict mapping node -> list of community ordinals
    """

    def __init__(self, k: int = 5, mode: str = "directed"):
        self.k = k
        self.mode = mode

    def fit(self, X, y=None):
        snapshot = check_snapshot(X)
        self.communities_ = detect(snapshot, self.k, self.mode)
        membership: dict[str, list[int]] = defaultdict(list)
        for c in self.communities_:
            for n in sorted(c.members):
                membership[n].append(c.ordinal)
        self.membership_ = dict(membership)
        self.n_communities_ = len(self.communities_)
        return self

    def fit_predict(self, X, y=None) -> list[frozenset[str]]:
        return [c.members for c in self.fit(X).communities_]

    def sizes(self) -> np.ndarray:
        return np.array([len(c) for c in self.communities_], dtype=int)


def write_groups(communities: Sequence[Community], directory, slot: int) -> Path:
    path = Path(directory) / f"groups_{slot}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = [{"id": c.id, "members": sorted(c.members)} for c in communities]
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    return path


def read_groups(path, k: int) -> list[Community]:
    path = Path(path)
    out = []
    for rec in json.loads(path.read_text(encoding="utf-8")):
        slot, ordinal = (int(p) for p in rec["id"].split(":"))
        out.append(Community(slot, ordinal, frozenset(rec["members"]), k))
    return out
