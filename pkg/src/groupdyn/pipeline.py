"""End-to-end pipeline with cached, resumable stages.

Stages and their dependencies::

    ingest -> slice -> graphs -> detect -> track --\\
       \\-----------------------> topics -------------> metrics

Every stage writes under ``<output>/<stage>/`` and records a fingerprint of
its parameters and upstream fingerprints in ``_stage.json``.  A stage whose
fingerprint is unchanged is skipped.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import date
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .corpus import (Interaction, corpus_stats, format_ts, parse_corpus, parse_ts,
                     resolve_interactions, write_corpus)
from .cpm import Community, detect, read_groups, write_groups
from .graph import build_snapshot, read_edge_list, write_edge_list
from .lda import GibbsLDA, dominant_topics, lda_topic_keywords
from .metrics import (MigrationTable, event_type_averages, group_profiles, groups_per_topic,
                      migration_between, significant_topics, transition_changes, user_profiles)
from .report import size_and_duration_breakdowns, size_census, write_csv
from .sgci import (EVENT_TYPES, GroupTimeline, Link, SGCITracker, TransitionEvent, write_events,
                   write_timelines)
from .slots import SlotConfig, TimeSlot, assign_all, build_slots
from .text import TextAnalyzer, TfidfKeywords, convergence_histogram

LOG = logging.getLogger(__name__)

STAGES = ("ingest", "slice", "graphs", "detect", "track", "topics", "metrics")
UPSTREAM = {"ingest": (), "slice": ("ingest",), "graphs": ("ingest", "slice"),
            "detect": ("graphs",), "track": ("detect",), "topics": ("ingest",),
            "metrics": ("ingest", "slice", "track", "topics")}


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException | str):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


@dataclass
class InputConfig:
    path: str = "corpus.jsonl"
    format: str = "jsonl"


@dataclass
class SliceConfig:
    window_days: int = 7
    step_days: int = 6
    range_start: str | None = None
    range_end: str | None = None


@dataclass
class GraphConfig:
    min_weight: int = 1


@dataclass
class DetectConfig:
    k: list = field(default_factory=lambda: [5])
    mode: str = "directed"
    workers: int = 1


@dataclass
class TrackConfig:
    threshold: float = 0.3
    size_ratio: float = 5.0
    size_epsilon: float = 0.1
    stability_min_slots: int = 3


@dataclass
class TopicsConfig:
    n_topics: int = 350
    alpha: Any = "auto"
    beta: float = 0.01
    iterations: int = 1000
    n_avg: int = 100
    seed: int = 42
    stop_words: str | None = None
    stem: bool = True
    keywords_top_n: int = 10
    histogram_bucket: float = 0.05


@dataclass
class MetricsConfig:
    significance: float = 0.05
    min_events: int = 10
    bin_width: float = 0.05
    period_days: int = 360
    group_scope: str = "intra"
    # "lda" uses inferred dominant topics; a path points to a message_id,topic CSV
    topic_source: str = "lda"


@dataclass
class PipelineConfig:
    input: InputConfig = field(default_factory=InputConfig)
    slice: SliceConfig = field(default_factory=SliceConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    detect: DetectConfig = field(default_factory=DetectConfig)
    track: TrackConfig = field(default_factory=TrackConfig)
    topics: TopicsConfig = field(default_factory=TopicsConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    output: str = "out"

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "PipelineConfig":
        sections = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in sections:
                raise ConfigError(f"unknown config section {key!r}")
            if key == "output":
                kwargs[key] = str(value["dir"] if isinstance(value, dict) else value)
                continue
            sub_cls = sections[key].default_factory
            if not isinstance(value, dict):
                raise ConfigError(f"section {key!r} must be a table")
            known = {f.name for f in fields(sub_cls)}
            unknown = set(value) - known
            if unknown:
                raise ConfigError(f"unknown keys in [{key}]: {sorted(unknown)}")
            kwargs[key] = sub_cls(**value)
        cfg = cls(**kwargs)
        if base_dir is not None:
            cfg.input.path = str((base_dir / cfg.input.path)) if not Path(cfg.input.path).is_absolute() else cfg.input.path
            if not Path(cfg.output).is_absolute():
                cfg.output = str(base_dir / cfg.output)
            for sec, attr in (("topics", "stop_words"), ("metrics", "topic_source")):
                obj = getattr(cfg, sec)
                val = getattr(obj, attr)
                if val and val != "lda" and not Path(val).is_absolute():
                    setattr(obj, attr, str(base_dir / val))
        cfg.validate()
        return cfg

    def to_dict(self, relative_to=None) -> dict:
        """Plain dict; file paths are made relative to *relative_to* when given."""
        data = asdict(self)
        if relative_to is not None:
            base = Path(relative_to).resolve()

            def rel(val):
                return os.path.relpath(Path(val).resolve(), base)

            data["input"]["path"] = rel(data["input"]["path"])
            data["output"] = rel(data["output"])
            for sec, attr in (("topics", "stop_words"), ("metrics", "topic_source")):
                val = data[sec][attr]
                if val and val != "lda":
                    data[sec][attr] = rel(val)
        return data

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            if path.suffix == ".json":
                data = json.loads(path.read_text(encoding="utf-8"))
            else:
                data = tomllib.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            return cls.from_dict(data, base_dir=path.parent)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.input.format in ("jsonl", "csv"), f"input.format must be jsonl or csv, got {self.input.format!r}")
        s = self.slice
        need(isinstance(s.window_days, int) and s.window_days >= 1, "slice.window_days must be a positive integer")
        need(isinstance(s.step_days, int) and 1 <= s.step_days <= s.window_days,
             "slice.step_days must be in [1, window_days]")
        for name in ("range_start", "range_end"):
            val = getattr(s, name)
            if val is not None:
                try:
                    date.fromisoformat(str(val))
                except ValueError:
                    raise ConfigError(f"slice.{name} is not an ISO date: {val!r}")
        if s.range_start and s.range_end:
            need(date.fromisoformat(str(s.range_start)) <= date.fromisoformat(str(s.range_end)),
                 "slice range is empty")
        need(isinstance(self.graph.min_weight, int) and self.graph.min_weight >= 1, "graph.min_weight must be >= 1")
        ks = self.detect.k if isinstance(self.detect.k, list) else [self.detect.k]
        need(ks and all(isinstance(k, int) and k >= 3 for k in ks), "detect.k must be integers >= 3")
        self.detect.k = sorted(set(ks))
        need(self.detect.mode in ("directed", "undirected"), "detect.mode must be directed or undirected")
        need(isinstance(self.detect.workers, int) and self.detect.workers >= 1, "detect.workers must be >= 1")
        t = self.track
        need(0 < t.threshold <= 1, "track.threshold must lie in (0, 1]")
        need(t.size_ratio > 0, "track.size_ratio must be positive")
        need(t.size_epsilon >= 0, "track.size_epsilon must be non-negative")
        need(isinstance(t.stability_min_slots, int) and t.stability_min_slots >= 1,
             "track.stability_min_slots must be >= 1")
        tp = self.topics
        need(isinstance(tp.n_topics, int) and tp.n_topics >= 2, "topics.n_topics must be >= 2")
        need(tp.alpha == "auto" or (isinstance(tp.alpha, (int, float)) and tp.alpha > 0),
             "topics.alpha must be 'auto' or positive")
        need(tp.beta > 0, "topics.beta must be positive")
        need(isinstance(tp.iterations, int) and tp.iterations >= 1, "topics.iterations must be >= 1")
        need(isinstance(tp.n_avg, int) and tp.n_avg >= 1, "topics.n_avg must be >= 1")
        need(tp.keywords_top_n >= 1, "topics.keywords_top_n must be >= 1")
        need(0 < tp.histogram_bucket <= 1, "topics.histogram_bucket must lie in (0, 1]")
        if tp.stop_words is not None:
            need(Path(tp.stop_words).exists(), f"stop word file not found: {tp.stop_words}")
        m = self.metrics
        need(0 <= m.significance < 1, "metrics.significance must lie in [0, 1)")
        need(isinstance(m.min_events, int) and m.min_events >= 1, "metrics.min_events must be >= 1")
        need(0 < m.bin_width <= 2, "metrics.bin_width must lie in (0, 2]")
        need(isinstance(m.period_days, int) and m.period_days >= 1, "metrics.period_days must be >= 1")
        need(m.group_scope in ("intra", "all"), "metrics.group_scope must be intra or all")
        if m.topic_source != "lda":
            need(Path(m.topic_source).exists(), f"topic source not found: {m.topic_source}")


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _detect_one(args):
    path, k, mode = args
    return detect(read_edge_list(path), k, mode)


class Pipeline:
    """Runs stages of a PipelineConfig against an output directory."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.root = Path(config.output)
        self.ran: list[str] = []
        self.skipped: list[str] = []

    def stage_dir(self, stage: str) -> Path:
        return self.root / stage

    def _manifest(self, stage: str) -> dict | None:
        path = self.stage_dir(stage) / "_stage.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def _params(self, stage: str) -> dict:
        c = self.config
        if stage == "ingest":
            path = Path(c.input.path)
            if not path.exists():
                raise StageError("ingest", f"input corpus not found: {path}")
            return {"format": c.input.format, "input_sha256": _file_digest(path)}
        if stage == "slice":
            return asdict(c.slice)
        if stage == "graphs":
            return asdict(c.graph)
        if stage == "detect":
            return {"k": c.detect.k, "mode": c.detect.mode}
        if stage == "track":
            return asdict(c.track)
        if stage == "topics":
            params = asdict(c.topics)
            if params["stop_words"]:
                params["stop_words"] = _file_digest(params["stop_words"])
            return params
        if stage == "metrics":
            params = asdict(c.metrics)
            if params["topic_source"] != "lda":
                params["topic_source"] = _file_digest(params["topic_source"])
            return params
        raise KeyError(stage)

    def fingerprint(self, stage: str) -> str:
        upstream = {}
        for up in UPSTREAM[stage]:
            man = self._manifest(up)
            if man is None or not man.get("complete"):
                raise StageError(stage, f"upstream stage {up!r} has not completed")
            upstream[up] = man["fingerprint"]
        return _digest({"stage": stage, "version": __version__, "params": self._params(stage),
                        "upstream": upstream})

    def run_stage(self, stage: str, force: bool = False) -> bool:
        """Run *stage* unless its cached output is current; return True if it ran."""
        fp = self.fingerprint(stage)
        man = self._manifest(stage)
        if not force and man and man.get("complete") and man.get("fingerprint") == fp:
            LOG.info("stage %s: cached", stage)
            self.skipped.append(stage)
            return False
        out = self.stage_dir(stage)
        if out.exists():
            shutil.rmtree(out)
        out.mkdir(parents=True)
        _write_json(out / "_stage.json", {"stage": stage, "fingerprint": fp, "complete": False})
        LOG.info("stage %s: running", stage)
        try:
            getattr(self, f"_run_{stage}")(out)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(stage, exc) from exc
        _write_json(out / "_stage.json", {"stage": stage, "fingerprint": fp, "complete": True})
        self.ran.append(stage)
        return True

    def run(self, stages=STAGES, force: bool = False) -> dict:
        if "ingest" in stages and not Path(self.config.input.path).is_file():
            raise ConfigError(f"input corpus not found: {self.config.input.path}")
        for stage in STAGES:
            if stage in stages:
                self.run_stage(stage, force=force)
        return self.bundle()

    def bundle(self) -> dict:
        """Paths of every completed stage's outputs."""
        out = {}
        for stage in STAGES:
            man = self._manifest(stage)
            if man and man.get("complete"):
                d = self.stage_dir(stage)
                out[stage] = sorted(str(p.relative_to(self.root)) for p in d.rglob("*")
                                    if p.is_file() and p.name != "_stage.json")
        return out

    # -- loaders -------------------------------------------------------
    def messages(self):
        return parse_corpus(self.stage_dir("ingest") / "messages.jsonl").messages

    def interactions(self) -> list[Interaction]:
        with open(self.stage_dir("ingest") / "interactions.csv", newline="", encoding="utf-8") as fh:
            return [Interaction(r["source"], r["target"], parse_ts(r["ts"]), r["message_id"])
                    for r in csv.DictReader(fh)]

    def slots(self) -> tuple[SlotConfig, list[TimeSlot]]:
        data = json.loads((self.stage_dir("slice") / "slots.json").read_text(encoding="utf-8"))
        cfg = SlotConfig(**data["config"])
        return cfg, build_slots(cfg)

    def groups(self, k: int) -> list[list[Community]]:
        d = self.stage_dir("detect") / f"k{k}"
        n = len(self.slots()[1])
        return [read_groups(d / f"groups_{i}.json", k) for i in range(n)]

    def tracking(self, k: int) -> tuple[list[list[Link]], list[TransitionEvent], list[GroupTimeline]]:
        d = self.stage_dir("track") / f"k{k}"
        data = json.loads((d / "tracking.json").read_text(encoding="utf-8"))
        links = [[Link(*l) for l in pair] for pair in data["links"]]
        events = [TransitionEvent(e["slot"], e["type"], tuple(e["predecessors"]), tuple(e["successors"]),
                                  tuple(tuple(p) for p in e["links"])) for e in data["events"]]
        timelines = [GroupTimeline(tuple(t["groups"]), t["start_slot"], t["stable"]) for t in data["timelines"]]
        return links, events, timelines

    def message_topics(self) -> dict[str, int]:
        src = self.config.metrics.topic_source
        path = self.stage_dir("topics") / "message_topics.csv" if src == "lda" else Path(src)
        with open(path, newline="", encoding="utf-8") as fh:
            return {r["message_id"]: int(r["topic"]) for r in csv.DictReader(fh)}

    # -- stages --------------------------------------------------------
    def _run_ingest(self, out: Path) -> None:
        parsed = parse_corpus(self.config.input.path, self.config.input.format)
        interactions, dangling = resolve_interactions(parsed.messages)
        bad = {r.record_id for r in dangling}
        kept = [m for m in parsed.messages if m.id not in bad]
        write_corpus(sorted(kept, key=lambda m: (m.timestamp, m.id)), out / "messages.jsonl")
        with open(out / "interactions.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["source", "target", "ts", "message_id"])
            for it in sorted(interactions, key=lambda i: (i.timestamp, i.message_id)):
                w.writerow([it.source, it.target, format_ts(it.timestamp), it.message_id])
        rejections = [{"line": r.line, "record_id": r.record_id, "reason": r.reason}
                      for r in parsed.rejections + dangling]
        write_csv(rejections, out / "rejections.csv", ["line", "record_id", "reason"])
        stats = corpus_stats(kept).to_dict()
        stats.update(records=parsed.n_records, rejected=len(rejections), interactions=len(interactions))
        _write_json(out / "stats.json", stats)

    def _run_slice(self, out: Path) -> None:
        c = self.config.slice
        start, end = c.range_start, c.range_end
        if start is None or end is None:
            stats = json.loads((self.stage_dir("ingest") / "stats.json").read_text(encoding="utf-8"))
            if stats["first"] is None:
                raise StageError("slice", "corpus is empty and no slot range is configured")
            start = start or stats["first"][:10]
            end = end or stats["last"][:10]
        cfg = SlotConfig(str(start), str(end), c.window_days, c.step_days)
        slots = build_slots(cfg)
        _write_json(out / "slots.json", {
            "config": {"range_start": cfg.range_start.isoformat(), "range_end": cfg.range_end.isoformat(),
                       "window_days": cfg.window_days, "step_days": cfg.step_days},
            "n_slots": len(slots), "slots": [s.to_dict() for s in slots]})

    def _run_graphs(self, out: Path) -> None:
        cfg, slots = self.slots()
        buckets = assign_all(slots, self.interactions(), cfg)
        rows = []
        for slot, bucket in zip(slots, buckets):
            snap = build_snapshot(bucket, slot.index, self.config.graph.min_weight)
            write_edge_list(snap, out)
            rows.append({"slot": slot.index, "nodes": len(snap.nodes), "arcs": len(snap.arcs),
                         "weight": snap.total_weight, "interactions": len(bucket)})
        write_csv(rows, out / "summary.csv", ["slot", "nodes", "arcs", "weight", "interactions"])

    def _run_detect(self, out: Path) -> None:
        n = len(self.slots()[1])
        paths = [self.stage_dir("graphs") / f"slot_{i}.csv" for i in range(n)]
        by_k = {}
        for k in self.config.detect.k:
            jobs = [(p, k, self.config.detect.mode) for p in paths]
            if self.config.detect.workers > 1:
                with ProcessPoolExecutor(self.config.detect.workers) as pool:
                    results = list(pool.map(_detect_one, jobs))
            else:
                results = [_detect_one(j) for j in jobs]
            for i, comms in enumerate(results):
                write_groups(comms, out / f"k{k}", i)
            by_k[k] = [c for comms in results for c in comms]
        write_csv(size_census(by_k), out / "size_census.csv")

    def _run_track(self, out: Path) -> None:
        t = self.config.track
        census_rows = {etype: {"type": etype} for etype in EVENT_TYPES}
        for k in self.config.detect.k:
            tracker = SGCITracker(t.threshold, t.size_ratio, t.size_epsilon, t.stability_min_slots)
            tracker.fit(self.groups(k))
            d = out / f"k{k}"
            write_events(tracker.events_, d / "events.csv")
            write_timelines(tracker.timelines_, d / "timelines.json")
            _write_json(d / "tracking.json", {
                "links": [[[l.predecessor, l.successor, l.similarity, l.intersection] for l in pair]
                          for pair in tracker.links_],
                "events": [{"slot": e.slot, "type": e.type, "predecessors": list(e.predecessors),
                            "successors": list(e.successors), "links": [list(p) for p in e.links]}
                           for e in tracker.events_],
                "timelines": [tl.to_dict() for tl in tracker.timelines_]})
            for etype, count in tracker.census_.items():
                census_rows[etype][f"k={k}"] = count
        write_csv(list(census_rows.values()), out / "event_census.csv")

    def _run_topics(self, out: Path) -> None:
        tc = self.config.topics
        messages = self.messages()
        analyzer = TextAnalyzer(stop_words=tc.stop_words, stem=tc.stem)
        tokens = [analyzer.tokenize(m.text) for m in messages]
        analyzer.fit([m.text for m in messages])
        vocab = analyzer.vocabulary_
        docs = [vocab.encode(t) for t in tokens]
        if sum(len(d) for d in docs) == 0:
            raise StageError("topics", "corpus has no tokens after preprocessing")
        model = GibbsLDA(n_topics=tc.n_topics, alpha=tc.alpha, beta=tc.beta, n_iter=tc.iterations,
                         n_avg=tc.n_avg, random_state=tc.seed).fit(docs, n_words=len(vocab))
        model.save(out / "model.json", vocab, [m.id for m in messages])
        dominant = dominant_topics(model.doc_topic_)
        rows = [{"message_id": m.id, "topic": int(dominant[i])}
                for i, m in enumerate(messages) if not model.empty_docs_[i]]
        write_csv(rows, out / "message_topics.csv", ["message_id", "topic"])
        topic_rows = []
        for t in range(model.n_topics_):
            kw = lda_topic_keywords(model, t, tc.keywords_top_n, vocab)
            topic_rows.append({"topic": t, "keywords": " ".join(sorted(kw.words, key=lambda w: (-kw.weights[w], w)))})
        write_csv(topic_rows, out / "topic_keywords.csv", ["topic", "keywords"])

        # keyword-set convergence on posts
        tfidf = TfidfKeywords(top_n=tc.keywords_top_n).fit(tokens)
        lda_sets = [lda_topic_keywords(model, t, tc.keywords_top_n, vocab) for t in range(model.n_topics_)]
        pairs = {"tfidf_lda": [], "tfidf_tags": [], "tags_lda": []}
        for i, m in enumerate(messages):
            if not m.is_post:
                continue
            kw = tfidf.transform([tokens[i]])[0]
            tags = {w for tag in m.tags for w in analyzer.tokenize(tag)}
            lda_kw = lda_sets[int(dominant[i])] if not model.empty_docs_[i] else set()
            pairs["tfidf_lda"].append((kw, lda_kw))
            pairs["tfidf_tags"].append((kw, tags))
            pairs["tags_lda"].append((tags, lda_kw))
        for name, prs in pairs.items():
            hist = convergence_histogram(prs, tc.histogram_bucket)
            rows = [{"similarity": c, "documents": n} for c, n in hist.rows()]
            rows.append({"similarity": "missing", "documents": hist.missing})
            write_csv(rows, out / f"convergence_{name}.csv", ["similarity", "documents"])

    def _run_metrics(self, out: Path) -> None:
        mc = self.config.metrics
        n_topics = self.config.topics.n_topics
        cfg, slots = self.slots()
        messages = self.messages()
        msg_buckets = assign_all(slots, messages, cfg)
        int_buckets = assign_all(slots, self.interactions(), cfg)
        topics = self.message_topics()
        period_of = {s.index: (s.start - cfg.range_start).days // mc.period_days for s in slots}
        users = [user_profiles(msg_buckets[i], topics, n_topics, i) for i in range(len(slots))]

        for k in self.config.detect.k:
            d = out / f"k{k}"
            groups = self.groups(k)
            links, events, timelines = self.tracking(k)
            profiles, topic_sets, ex_rows = {}, {}, []
            for i, comms in enumerate(groups):
                gp = group_profiles(comms, msg_buckets[i], int_buckets[i], topics, n_topics, mc.group_scope)
                profiles.update(gp)
                rows = []
                for c in comms:
                    p = gp[c.id]
                    ts = significant_topics(p.weights if p.defined else None, mc.significance, c.id)
                    topic_sets[c.id] = ts
                    if p.defined:
                        rows += [{"group_id": c.id, "topic": t, "exploitation": float(p.weights[t]),
                                  "significant": int(t in ts.significant_topics), "messages": p.message_count}
                                 for t in np.flatnonzero(p.weights)]
                write_csv(rows, d / f"exploitation_{i}.csv",
                          ["group_id", "topic", "exploitation", "significant", "messages"])

            changes = transition_changes(events, profiles)
            write_csv([{"slot": ch.slot, "event_type": ch.event_type, "predecessor": ch.predecessor,
                        "successors": "|".join(ch.successors), "c": ch.c, "mpc": ch.mpc, "mnc": ch.mnc}
                       for ch in changes], d / "transition_changes.csv",
                      ["slot", "event_type", "predecessor", "successors", "c", "mpc", "mnc"])
            averages = event_type_averages(changes, mc.min_events, period_of)
            write_csv([{"event_type": a.event_type, "period": a.period, "avg_c": a.avg_c,
                        "avg_mpc": a.avg_mpc, "avg_mnc": a.avg_mnc, "n_events": a.n_events} for a in averages],
                      d / "event_changes.csv", ["event_type", "period", "avg_c", "avg_mpc", "avg_mnc", "n_events"])

            table = MigrationTable.empty(mc.bin_width)
            for n in range(len(slots) - 1):
                gp_n = {c.id: profiles[c.id] for c in groups[n]}
                table = table.merge(migration_between(groups[n], groups[n + 1], links[n], gp_n,
                                                      users[n], mc.bin_width))
            write_csv(table.rows(), d / "migration.csv",
                      ["bin_lo", "bin_hi", "p_join", "n_join_candidates", "n_joiners",
                       "p_leave", "n_leave_candidates", "n_leavers"])
            _write_json(d / "migration_summary.json", {
                "inactive_joiners": table.inactive_joiners, "unprofiled_joiners": table.unprofiled_joiners,
                "unprofiled_members": table.unprofiled_members, "groups_skipped": table.groups_skipped,
                "joiners": int(table.joiners.sum()), "leavers": int(table.leavers.sum())})

            all_groups = [c for comms in groups for c in comms]
            counts = groups_per_topic(topic_sets.values(), n_topics)
            write_csv([{"topic": t, "groups": int(c)} for t, c in enumerate(counts) if c],
                      d / "groups_per_topic.csv", ["topic", "groups"])
            tables = size_and_duration_breakdowns(all_groups, timelines, topic_sets, n_topics)
            for name, rows in tables.items():
                cols = ["bucket", "n_topics", "groups"] if name.endswith("topics") else \
                    ["bucket", "topic", "mean_exploitation"]
                write_csv(rows, d / f"{name}.csv", cols)


def run_pipeline(config: PipelineConfig, force: bool = False) -> dict:
    pipe = Pipeline(config)
    bundle = pipe.run(force=force)
    return {"outputs": bundle, "ran": pipe.ran, "skipped": pipe.skipped}
