"""Corpus ingest: parse posts/comments and resolve who each comment addresses.

A comment is an interaction from its author to the user it replies to.  The
target is the user named by an ``@name`` mention when that user commented
under the same post; otherwise it is the author of the post.
"""
from __future__ import annotations

import csv
import json
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

LOG = logging.getLogger(__name__)

FORMATS = ("jsonl", "csv")
CSV_COLUMNS = ["id", "kind", "author", "ts", "post_id", "parent_comment_id", "text", "tags"]

_MENTION = re.compile(r"@(\S+)")
_PUNCT = ".,;:!?\"'()[]{}<>"


class CorpusError(ValueError):
    """Fatal corpus problem (unknown format, duplicate id)."""


@dataclass(frozen=True)
class Message:
    id: str
    author: str
    timestamp: datetime
    kind: str
    post_id: str
    parent_comment_id: str | None = None
    text: str = ""
    tags: tuple[str, ...] = ()
    mention: str | None = None

    @property
    def is_post(self) -> bool:
        return self.kind == "post"

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "author": self.author,
            "ts": format_ts(self.timestamp),
            "post_id": self.post_id,
            "parent_comment_id": self.parent_comment_id,
            "text": self.text,
            "tags": list(self.tags),
        }


@dataclass(frozen=True)
class Interaction:
    source: str
    target: str
    timestamp: datetime
    message_id: str


@dataclass(frozen=True)
class Rejection:
    line: int
    reason: str
    record_id: str | None = None


@dataclass
class ParsedCorpus:
    messages: list[Message] = field(default_factory=list)
    rejections: list[Rejection] = field(default_factory=list)

    @property
    def n_records(self) -> int:
        return len(self.messages) + len(self.rejections)


@dataclass(frozen=True)
class CorpusStats:
    users: int = 0
    bloggers: int = 0
    posts: int = 0
    comments: int = 0
    tags: int = 0
    distinct_tags: int = 0
    first: datetime | None = None
    last: datetime | None = None

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["first"] = format_ts(self.first) if self.first else None
        out["last"] = format_ts(self.last) if self.last else None
        return out


def parse_ts(value: str) -> datetime:
    """Parse an ISO-8601 instant into an aware UTC datetime (seconds precision)."""
    if not isinstance(value, str) or not value:
        raise ValueError("missing timestamp")
    text = value.strip()
    if text.endswith("Z") or text.endswith("z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_ts(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def normalize_name(name: str) -> str:
    return name.strip().strip(_PUNCT).casefold()


def extract_mention(text: str) -> str | None:
    """First ``@name`` in *text*, with surrounding punctuation trimmed."""
    for match in _MENTION.finditer(text or ""):
        name = match.group(1).strip(_PUNCT)
        if name:
            return name
    return None


def normalize_tags(tags: Iterable[str]) -> tuple[str, ...]:
    out = []
    for tag in tags:
        tag = str(tag).strip().lower()
        if tag:
            out.append(tag)
    return tuple(out)


def message_from_record(rec: dict) -> Message:
    """Build a validated Message from a decoded record; raise ValueError otherwise."""
    if not isinstance(rec, dict):
        raise ValueError("record is not an object")
    msg_id = rec.get("id")
    if not isinstance(msg_id, str) or not msg_id:
        raise ValueError("missing id")
    kind = rec.get("kind")
    if kind not in ("post", "comment"):
        raise ValueError(f"bad kind {kind!r}")
    author = rec.get("author")
    if not isinstance(author, str) or not author.strip():
        raise ValueError("missing author")
    ts = parse_ts(rec.get("ts"))
    text = rec.get("text") or ""
    if not isinstance(text, str):
        raise ValueError("text is not a string")
    post_id = rec.get("post_id") or None
    parent = rec.get("parent_comment_id") or None
    tags = rec.get("tags") or []
    if isinstance(tags, str):
        tags = [t for t in tags.split("|")]
    if not isinstance(tags, list):
        raise ValueError("tags is not a list")

    if kind == "post":
        if post_id is not None and post_id != msg_id:
            raise ValueError("post_id of a post must equal its id")
        if parent is not None:
            raise ValueError("post cannot have parent_comment_id")
        return Message(msg_id, author.strip(), ts, kind, msg_id, None, text,
                       normalize_tags(tags), extract_mention(text))
    if post_id is None:
        raise ValueError("comment without post_id")
    return Message(msg_id, author.strip(), ts, kind, str(post_id),
                   None if parent is None else str(parent), text, (),
                   extract_mention(text))


def _iter_jsonl(path: Path) -> Iterator[tuple[int, dict | None, str | None]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line), None
            except json.JSONDecodeError as exc:
                yield lineno, None, f"invalid json: {exc.msg}"


def _iter_csv(path: Path) -> Iterator[tuple[int, dict | None, str | None]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise CorpusError(f"csv header lacks columns: {sorted(missing)}")
        start = 2
        for row in reader:
            if None in row:
                yield start, None, "too many fields"
            else:
                rec = dict(row)
                rec["tags"] = [t for t in (rec.get("tags") or "").split("|") if t]
                yield start, rec, None
            start = reader.line_num + 1


def iter_records(path, fmt: str = "jsonl", date_range=None) -> Iterator[Message | Rejection]:
    """Yield a Message or a Rejection for every record in *path*.

    Duplicate ids raise CorpusError.  *date_range* is an optional
    ``(start, end)`` pair of aware datetimes, both inclusive.
    """
    if fmt not in FORMATS:
        raise CorpusError(f"unknown corpus format {fmt!r}; expected one of {FORMATS}")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    reader = _iter_jsonl if fmt == "jsonl" else _iter_csv
    seen: set[str] = set()
    for lineno, rec, error in reader(path):
        if error is not None:
            LOG.warning("%s:%d rejected: %s", path, lineno, error)
            yield Rejection(lineno, error)
            continue
        try:
            msg = message_from_record(rec)
        except (ValueError, TypeError) as exc:
            rid = rec.get("id") if isinstance(rec, dict) else None
            LOG.warning("%s:%d rejected: %s", path, lineno, exc)
            yield Rejection(lineno, str(exc), rid if isinstance(rid, str) else None)
            continue
        if date_range is not None and not (date_range[0] <= msg.timestamp <= date_range[1]):
            LOG.warning("%s:%d rejected: timestamp outside range", path, lineno)
            yield Rejection(lineno, "timestamp outside corpus range", msg.id)
            continue
        if msg.id in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate id {msg.id!r}")
        seen.add(msg.id)
        yield msg


def parse_corpus(path, fmt: str = "jsonl", date_range=None) -> ParsedCorpus:
    parsed = ParsedCorpus()
    for item in iter_records(path, fmt, date_range):
        if isinstance(item, Rejection):
            parsed.rejections.append(item)
        else:
            parsed.messages.append(item)
    return parsed


def write_corpus(messages: Iterable[Message], path, fmt: str = "jsonl") -> None:
    if fmt not in FORMATS:
        raise CorpusError(f"unknown corpus format {fmt!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if fmt == "jsonl":
            for msg in messages:
                fh.write(json.dumps(msg.to_record(), ensure_ascii=False, sort_keys=True) + "\n")
            return
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for msg in messages:
            rec = msg.to_record()
            rec["tags"] = "|".join(rec["tags"])
            rec["parent_comment_id"] = rec["parent_comment_id"] or ""
            writer.writerow(rec)


class CorpusIndex:
    """Message lookup by id plus, per post, the authors who commented under it."""

    def __init__(self, messages: Iterable[Message]):
        self.by_id: dict[str, Message] = {}
        self._commenters: dict[str, dict[str, set[str]]] = defaultdict(lambda: defaultdict(set))
        for msg in messages:
            self.by_id[msg.id] = msg
            if not msg.is_post:
                self._commenters[msg.post_id][normalize_name(msg.author)].add(msg.author)

    def __contains__(self, msg_id: str) -> bool:
        return msg_id in self.by_id

    def __getitem__(self, msg_id: str) -> Message:
        return self.by_id[msg_id]

    def commenters(self, post_id: str, name: str) -> set[str]:
        """Authors under *post_id* whose name matches *name* case-insensitively."""
        thread = self._commenters.get(post_id)
        if not thread:
            return set()
        return set(thread.get(normalize_name(name), ()))


def resolve_target(comment: Message, index: CorpusIndex) -> Interaction:
    """Interaction for *comment*: mentioned thread participant, else post author.

    Raises KeyError for a dangling post_id and ValueError for a non-comment.
    """
    if comment.is_post:
        raise ValueError(f"{comment.id} is a post, not a comment")
    post = index.by_id.get(comment.post_id)
    if post is None or not post.is_post:
        raise KeyError(f"comment {comment.id}: dangling post_id {comment.post_id!r}")
    target = post.author
    if comment.mention:
        matches = index.commenters(comment.post_id, comment.mention)
        if len(matches) == 1:
            target = next(iter(matches))
        elif len(matches) > 1:
            LOG.warning("comment %s: ambiguous mention @%s (%s); using post author",
                        comment.id, comment.mention, sorted(matches))
    return Interaction(comment.author, target, comment.timestamp, comment.id)


def resolve_interactions(messages: list[Message]) -> tuple[list[Interaction], list[Rejection]]:
    """One Interaction per resolvable comment; dangling comments are rejected."""
    index = CorpusIndex(messages)
    interactions, rejected = [], []
    for msg in messages:
        if msg.is_post:
            continue
        try:
            interactions.append(resolve_target(msg, index))
        except KeyError as exc:
            LOG.warning("%s", exc.args[0])
            rejected.append(Rejection(0, "dangling post_id", msg.id))
    return interactions, rejected


def corpus_stats(messages: Iterable[Message]) -> CorpusStats:
    users, bloggers, tags = set(), set(), set()
    posts = comments = n_tags = 0
    first = last = None
    for msg in messages:
        users.add(msg.author)
        if msg.is_post:
            posts += 1
            bloggers.add(msg.author)
            n_tags += len(msg.tags)
            tags.update(msg.tags)
        else:
            comments += 1
        if first is None or msg.timestamp < first:
            first = msg.timestamp
        if last is None or msg.timestamp > last:
            last = msg.timestamp
    return CorpusStats(len(users), len(bloggers), posts, comments, n_tags, len(tags), first, last)
