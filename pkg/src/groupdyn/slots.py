"""Overlapping fixed-length time slots over the corpus timeline."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from datetime import date, datetime, time, timedelta, timezone
from typing import Iterable, Sequence, TypeVar

T = TypeVar("T")


def _as_date(value) -> date:
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    return date.fromisoformat(str(value))


def _midnight(day: date) -> datetime:
    return datetime.combine(day, time(0), tzinfo=timezone.utc)


@dataclass(frozen=True)
class SlotConfig:
    """Slot geometry.  ``range_end`` is inclusive."""

    range_start: date
    range_end: date
    window_days: int = 7
    step_days: int = 6

    def __post_init__(self):
        object.__setattr__(self, "range_start", _as_date(self.range_start))
        object.__setattr__(self, "range_end", _as_date(self.range_end))
        if self.window_days < 1 or self.step_days < 1:
            raise ValueError("window_days and step_days must be positive")
        if self.step_days > self.window_days:
            raise ValueError("step_days must not exceed window_days")
        if self.range_start > self.range_end:
            raise ValueError("empty range: range_start is after range_end")

    @property
    def end_exclusive(self) -> date:
        return self.range_end + timedelta(days=1)

    @property
    def max_multiplicity(self) -> int:
        return math.ceil(self.window_days / self.step_days)


@dataclass(frozen=True)
class TimeSlot:
    index: int
    start: date
    end: date
    partial: bool = False

    @cached_property
    def start_dt(self) -> datetime:
        return _midnight(self.start)

    @cached_property
    def end_dt(self) -> datetime:
        return _midnight(self.end)

    @property
    def days(self) -> int:
        return (self.end - self.start).days

    def contains(self, ts: datetime) -> bool:
        return self.start_dt <= ts < self.end_dt

    def to_dict(self) -> dict:
        return {"index": self.index, "start": self.start.isoformat(),
                "end": self.end.isoformat(), "partial": self.partial}


def build_slots(config: SlotConfig) -> list[TimeSlot]:
    """Slots starting every ``step_days`` until the range is covered.

    The last slot is clipped at the range end and flagged ``partial`` when
    it is shorter than the window.
    """
    slots = []
    stop = config.end_exclusive
    start = config.range_start
    while True:
        end = start + timedelta(days=config.window_days)
        partial = end > stop
        slots.append(TimeSlot(len(slots), start, min(end, stop), partial))
        if end >= stop:
            break
        start = start + timedelta(days=config.step_days)
    return slots


def assign(slot: TimeSlot, items: Iterable[T]) -> list[T]:
    """Items whose ``timestamp`` lies in ``[slot.start, slot.end)``."""
    lo, hi = slot.start_dt, slot.end_dt
    return [item for item in items if lo <= item.timestamp < hi]


def slot_indices(ts: datetime, slots: Sequence[TimeSlot], config: SlotConfig) -> list[int]:
    """Indices of every slot containing *ts* (empty when out of range)."""
    offset = (ts - slots[0].start_dt).total_seconds() / 86400.0 if slots else -1.0
    if offset < 0:
        return []
    last = min(int(offset // config.step_days), len(slots) - 1)
    first = max(0, math.floor((offset - config.window_days) / config.step_days))
    return [i for i in range(first, last + 1) if slots[i].contains(ts)]


def assign_all(slots: Sequence[TimeSlot], items: Iterable[T], config: SlotConfig) -> list[list[T]]:
    """Bucket every item into all slots that contain it, in one pass."""
    buckets: list[list[T]] = [[] for _ in slots]
    for item in items:
        for i in slot_indices(item.timestamp, slots, config):
            buckets[i].append(item)
    return buckets
