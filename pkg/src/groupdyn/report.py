"""Tabular summaries: group-size census and size/duration topic cross-tabs."""
from __future__ import annotations

import csv
import math
from collections import Counter, defaultdict
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .cpm import Community
from .metrics import GroupTopicSet
from .sgci import GroupTimeline

# right-exclusive, the last one open-ended
SIZE_BUCKETS = [(0, 5, "< 5"), (5, 6, "5 -- 6"), (6, 7, "6 -- 7"), (7, 8, "7 -- 8"),
                (8, 9, "8 -- 9"), (9, 10, "9 -- 10"), (10, 50, "10 -- 50"),
                (50, 100, "50 -- 100"), (100, 200, "100 -- 200"), (200, math.inf, "> 200")]
DURATION_BUCKETS = [(1, 2, "1"), (2, 3, "2"), (3, 5, "3 -- 5"), (5, 10, "5 -- 10"),
                    (10, 20, "10 -- 20"), (20, 50, "20 -- 50"), (50, math.inf, "> 50")]


def bucket_label(value: float, buckets=SIZE_BUCKETS) -> str:
    for lo, hi, label in buckets:
        if lo <= value < hi:
            return label
    raise ValueError(f"{value} falls outside every bucket")


def size_census(groups_by_k: Mapping[int, Iterable[Community]]) -> list[dict]:
    """Group counts per size bucket (rows) and k (columns)."""
    ks = sorted(groups_by_k)
    counts = {k: Counter(bucket_label(len(c)) for c in groups_by_k[k]) for k in ks}
    return [{"size": label, **{f"k={k}": counts[k][label] for k in ks}}
            for _, _, label in SIZE_BUCKETS]


def timeline_lengths(timelines: Iterable[GroupTimeline]) -> dict[str, int]:
    """Group id -> length (in slots) of the timeline the group belongs to."""
    return {gid: len(t) for t in timelines for gid in t.groups}


def breakdown(groups: Sequence[Community], topic_sets: Mapping[str, GroupTopicSet],
              key: Mapping[str, float], buckets, n_topics: int) -> tuple[list[dict], list[dict]]:
    """Cross-tab of bucket x number of significant topics, plus mean exploitation per topic."""
    cells: Counter = Counter()
    sums: dict[str, np.ndarray] = defaultdict(lambda: np.zeros(n_topics))
    seen: Counter = Counter()
    for g in groups:
        ts = topic_sets.get(g.id)
        if ts is None or ts.exploitation is None or g.id not in key:
            continue
        label = bucket_label(key[g.id], buckets)
        cells[(label, len(ts.significant_topics))] += 1
        sums[label] += ts.exploitation
        seen[label] += 1
    order = {label: i for i, (_, _, label) in enumerate(buckets)}
    counts = [{"bucket": b, "n_topics": n, "groups": c}
              for (b, n), c in sorted(cells.items(), key=lambda kv: (order[kv[0][0]], kv[0][1]))]
    exploitation = [{"bucket": b, "topic": t, "mean_exploitation": float(sums[b][t] / seen[b])}
                    for b in sorted(seen, key=order.get) for t in range(n_topics) if sums[b][t] > 0]
    return counts, exploitation


def size_and_duration_breakdowns(groups: Sequence[Community], timelines: Iterable[GroupTimeline],
                                 topic_sets: Mapping[str, GroupTopicSet], n_topics: int) -> dict:
    sizes = {g.id: len(g) for g in groups}
    durations = timeline_lengths(timelines)
    size_counts, size_ex = breakdown(groups, topic_sets, sizes, SIZE_BUCKETS, n_topics)
    dur_counts, dur_ex = breakdown(groups, topic_sets, durations, DURATION_BUCKETS, n_topics)
    return {"size_topics": size_counts, "size_exploitation": size_ex,
            "duration_topics": dur_counts, "duration_exploitation": dur_ex}


def write_csv(rows: Sequence[Mapping], path, fieldnames: Sequence[str] | None = None) -> Path:
    """Write dict rows; None becomes an empty cell and floats use repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fieldnames is None:
        fieldnames = list(rows[0]) if rows else []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in fieldnames})
    return path
