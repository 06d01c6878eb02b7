"""Command-line interface.

Stage subcommands share one output root (``--out``, default ``out``) and
persist their effective settings in ``<out>/config.json`` so later stages
inherit them.  Exit codes: 0 ok, 2 configuration error, 3 stage failure.
"""
from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .pipeline import STAGES, ConfigError, Pipeline, PipelineConfig, StageError

EXIT_CONFIG = 2
EXIT_STAGE = 3


def _load(out: str, config: str | None) -> PipelineConfig:
    if config:
        cfg = PipelineConfig.load(config)
        cfg.output = out or cfg.output
        return cfg
    saved = Path(out) / "config.json"
    if saved.exists():
        cfg = PipelineConfig.from_dict(json.loads(saved.read_text(encoding="utf-8")), base_dir=Path(out))
    else:
        cfg = PipelineConfig()
    cfg.output = out
    return cfg


def _execute(ctx: click.Context, out: str, config: str | None, overrides: dict, stages) -> None:
    try:
        cfg = _load(out, config)
        for dotted, value in overrides.items():
            if value is None:
                continue
            section, attr = dotted.split(".")
            setattr(getattr(cfg, section), attr, value)
        cfg.validate()
        pipe = Pipeline(cfg)
        Path(cfg.output).mkdir(parents=True, exist_ok=True)
        (Path(cfg.output) / "config.json").write_text(
            json.dumps(cfg.to_dict(relative_to=cfg.output), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        if "ingest" in stages and not Path(cfg.input.path).is_file():
            raise ConfigError(f"input corpus not found: {cfg.input.path}")
        for stage in stages:
            ran = pipe.run_stage(stage, force=ctx.obj.get("force", False))
            click.echo(f"{stage}: {'done' if ran else 'cached'}")
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        ctx.exit(EXIT_CONFIG)
    except StageError as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(EXIT_STAGE)


out_option = click.option("--out", "out", default="out", show_default=True, help="Output root directory.")
config_option = click.option("--config", "config", type=click.Path(exists=True, dir_okay=False),
                             help="Pipeline TOML to start from.")


@click.group()
@click.option("-v", "--verbose", count=True)
@click.option("--force", is_flag=True, help="Rerun stages even when cached.")
@click.pass_context
def main(ctx, verbose, force):
    """Group evolution and topic dynamics pipeline."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    ctx.ensure_object(dict)
    ctx.obj["force"] = force


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default="jsonl", show_default=True)
@out_option
@config_option
@click.pass_context
def ingest(ctx, input_path, fmt, out, config):
    """Parse and validate a corpus; resolve interactions."""
    _execute(ctx, out, config, {"input.path": str(Path(input_path).resolve()), "input.format": fmt},
             ["ingest"])


@main.command("slice")
@click.option("--window", type=int)
@click.option("--step", type=int)
@click.option("--from", "range_start")
@click.option("--to", "range_end")
@out_option
@config_option
@click.pass_context
def slice_cmd(ctx, window, step, range_start, range_end, out, config):
    """Split the time range into overlapping slots."""
    _execute(ctx, out, config, {"slice.window_days": window, "slice.step_days": step,
                                "slice.range_start": range_start, "slice.range_end": range_end}, ["slice"])
    n = json.loads((Path(out) / "slice" / "slots.json").read_text(encoding="utf-8"))["n_slots"]
    click.echo(f"{n} slots")


@main.command()
@click.option("--min-weight", type=int)
@out_option
@config_option
@click.pass_context
def graphs(ctx, min_weight, out, config):
    """Build one directed interaction graph per slot."""
    _execute(ctx, out, config, {"graph.min_weight": min_weight}, ["graphs"])


@main.command()
@click.option("--k", "k", type=int, multiple=True, help="Clique size; repeat for several.")
@click.option("--mode", type=click.Choice(["directed", "undirected"]))
@click.option("--workers", type=int)
@out_option
@config_option
@click.pass_context
def detect(ctx, k, mode, workers, out, config):
    """Detect overlapping groups by clique percolation."""
    _execute(ctx, out, config, {"detect.k": list(k) or None, "detect.mode": mode,
                                "detect.workers": workers}, ["detect"])


@main.command()
@click.option("--threshold", type=float)
@click.option("--size-ratio", type=float)
@click.option("--size-epsilon", type=float)
@click.option("--stability", type=int)
@out_option
@config_option
@click.pass_context
def track(ctx, threshold, size_ratio, size_epsilon, stability, out, config):
    """Match groups across slots and classify evolution events."""
    _execute(ctx, out, config, {"track.threshold": threshold, "track.size_ratio": size_ratio,
                                "track.size_epsilon": size_epsilon, "track.stability_min_slots": stability},
             ["track"])


@main.group()
def topics():
    """Topic modelling."""


def _alpha(value):
    if value is None or value == "auto":
        return value
    try:
        return float(value)
    except ValueError:
        raise click.BadParameter("alpha must be 'auto' or a number")


@topics.command()
@click.option("--t", "n_topics", type=int)
@click.option("--alpha")
@click.option("--beta", type=float)
@click.option("--iters", type=int)
@click.option("--avg", "n_avg", type=int, help="Final sweeps averaged into the estimates.")
@click.option("--seed", type=int)
@click.option("--stop-words", type=click.Path(exists=True, dir_okay=False))
@out_option
@config_option
@click.pass_context
def train(ctx, n_topics, alpha, beta, iters, n_avg, seed, stop_words, out, config):
    """Train LDA on the ingested corpus and label every message."""
    _execute(ctx, out, config, {"topics.n_topics": n_topics, "topics.alpha": _alpha(alpha),
                                "topics.beta": beta, "topics.iterations": iters, "topics.n_avg": n_avg,
                                "topics.seed": seed, "topics.stop_words": stop_words}, ["topics"])


@main.command()
@click.option("--significance", type=float)
@click.option("--min-events", type=int)
@click.option("--bin", "bin_width", type=float)
@click.option("--period-days", type=int)
@click.option("--scope", type=click.Choice(["intra", "all"]))
@click.option("--topic-source", help="'lda' or a message_id,topic CSV.")
@out_option
@config_option
@click.pass_context
def metrics(ctx, significance, min_events, bin_width, period_days, scope, topic_source, out, config):
    """Compute exploitation, transition-change and migration metrics."""
    _execute(ctx, out, config, {"metrics.significance": significance, "metrics.min_events": min_events,
                                "metrics.bin_width": bin_width, "metrics.period_days": period_days,
                                "metrics.group_scope": scope, "metrics.topic_source": topic_source},
             ["metrics"])


@main.command()
@click.option("--script", "script_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int)
@click.option("--out", "out", required=True, type=click.Path(dir_okay=False))
@click.option("--ledger", required=True, type=click.Path(dir_okay=False))
@click.pass_context
def synth(ctx, script_path, seed, out, ledger):
    """Generate a synthetic corpus and its ground-truth ledger."""
    from .synth import InfeasibleScript, ScenarioScript, generate, write_outputs

    try:
        script = ScenarioScript.from_json(script_path)
        if seed is not None:
            script.seed = seed
        messages, truth = generate(script)
    except (InfeasibleScript, ValueError, TypeError) as exc:
        click.echo(f"config error: {exc}", err=True)
        ctx.exit(EXIT_CONFIG)
    write_outputs(messages, truth, out, ledger)
    click.echo(f"{len(messages)} messages")


@main.command()
@click.option("--config", "config", required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def run(ctx, config):
    """Run every stage from a pipeline TOML."""
    try:
        cfg = PipelineConfig.load(config)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        ctx.exit(EXIT_CONFIG)
    _execute(ctx, cfg.output, config, {}, STAGES)


if __name__ == "__main__":
    sys.exit(main())
