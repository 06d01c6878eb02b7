"""Per-slot directed interaction graphs."""
from __future__ import annotations

import csv
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .corpus import Interaction


@dataclass(frozen=True)
class Snapshot:
    """Directed weighted graph of one slot.  No self-loops, no isolated nodes."""

    slot_index: int
    arcs: dict[tuple[str, str], int]
    provenance: dict[tuple[str, str], tuple[str, ...]] | None = field(default=None, compare=False)

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(n for arc in self.arcs for n in arc)

    @property
    def total_weight(self) -> int:
        return sum(self.arcs.values())

    def has_arc(self, u: str, v: str) -> bool:
        return (u, v) in self.arcs

    def neighbors(self) -> dict[str, set[str]]:
        """Undirected adjacency (arc in either direction)."""
        adj: dict[str, set[str]] = defaultdict(set)
        for u, v in self.arcs:
            adj[u].add(v)
            adj[v].add(u)
        return dict(adj)

    def successors(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = defaultdict(set)
        for u, v in self.arcs:
            out[u].add(v)
        return dict(out)


@dataclass(frozen=True)
class UndirectedSnapshot:
    slot_index: int
    edges: dict[tuple[str, str], int]

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(n for e in self.edges for n in e)

    def neighbors(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = defaultdict(set)
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return dict(adj)

    def as_directed(self) -> Snapshot:
        """Both arc directions per edge, so directed clique rules reduce to undirected ones."""
        arcs = {}
        for (u, v), w in self.edges.items():
            arcs[(u, v)] = w
            arcs[(v, u)] = w
        return Snapshot(self.slot_index, arcs)


def build_snapshot(interactions: Iterable[Interaction], slot_index: int = 0,
                   min_weight: int = 1, keep_provenance: bool = False) -> Snapshot:
    """Arc u->v weighted by the number of u->v interactions; self-replies dropped."""
    counts: Counter = Counter()
    prov: dict[tuple[str, str], list[str]] = defaultdict(list)
    for it in interactions:
        if it.source == it.target:
            continue
        counts[(it.source, it.target)] += 1
        if keep_provenance:
            prov[(it.source, it.target)].append(it.message_id)
    arcs = {arc: w for arc, w in sorted(counts.items()) if w >= min_weight}
    provenance = None
    if keep_provenance:
        provenance = {arc: tuple(sorted(prov[arc])) for arc in arcs}
    return Snapshot(slot_index, arcs, provenance)


def symmetrize(snapshot: Snapshot) -> UndirectedSnapshot:
    edges: Counter = Counter()
    for (u, v), w in snapshot.arcs.items():
        edges[(u, v) if u < v else (v, u)] += w
    return UndirectedSnapshot(snapshot.slot_index, dict(sorted(edges.items())))


def snapshot_from_edges(edges: Iterable, slot_index: int = 0) -> Snapshot:
    """Snapshot from ``(source, target)`` or ``(source, target, weight)`` rows."""
    arcs: Counter = Counter()
    for row in edges:
        u, v = str(row[0]), str(row[1])
        if u == v:
            continue
        arcs[(u, v)] += int(row[2]) if len(row) > 2 else 1
    return Snapshot(slot_index, dict(sorted(arcs.items())))


def write_edge_list(snapshot: Snapshot, directory) -> Path:
    path = Path(directory) / f"slot_{snapshot.slot_index}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source", "target", "weight"])
        for (u, v), w in sorted(snapshot.arcs.items()):
            writer.writerow([u, v, w])
    return path


def read_edge_list(path, slot_index: int | None = None) -> Snapshot:
    path = Path(path)
    if slot_index is None:
        slot_index = int(path.stem.split("_")[-1])
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(r["source"], r["target"], r["weight"]) for r in csv.DictReader(fh)]
    return snapshot_from_edges(rows, slot_index)
