"""atommem CLI entry point.

Commands:

  build        source QA file -> task JSONL (niah or multiq)
  run          task JSONL + policy -> run directory with transcripts
  score        run directories -> scores.json, action_stats.csv, mean EM
  advantage    rewards file -> per-group advantages JSONL
  make-script  task JSONL -> replay scripts (gold / wrong / empty)

Exit codes: 0 ok, 1 run failure, 2 invalid input. Every AtomMemError is
shown as a Rich panel on stderr, never as a traceback.
"""
import json
import logging
from pathlib import Path
from typing import Annotated, Optional

import numpy as np
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Table

from atommem.config import AtomMemConfig, load_config
from atommem.environment.chunking import WhitespaceTokenCounter
from atommem.errors import (
    AtomMemError,
    BadGroupSize,
    ConfigError,
    MissingTranscripts,
    PolicyError,
    TaskBuildError,
    TranscriptError,
)
from atommem.fsutil import write_bytes_atomic
from atommem.policy.base import Policy
from atommem.policy.heuristic import heuristic_policy
from atommem.policy.remote import remote_policy
from atommem.policy.replay import ReplayPolicy, load_scripts, make_script, write_scripts
from atommem.protocol.parser import SchemaKind
from atommem.retrieval.embedding import make_provider
from atommem.reward.grpo import GROUP_SIZE, compute_group_advantages
from atommem.runner import PolicyKind, execute_run, make_manifest, read_rewards, score_runs
from atommem.tasks.builder import MAX_QUESTIONS, build_tasks
from atommem.tasks.ingest import load_sources
from atommem.tasks.schema import TaskInstance, load_tasks, write_tasks

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID_INPUT = 2

# Errors caused by bad files or flags rather than by a failing run.
_INPUT_ERRORS = (ConfigError, TaskBuildError, TranscriptError, MissingTranscripts, BadGroupSize, PolicyError)

app = typer.Typer(
    name="atommem",
    help="atommem: atomic CRUD memory, streaming episodes, NIAH tasks and GRPO arithmetic.",
    add_completion=False,
)
console = Console()
err_console = Console(stderr=True)
logger = logging.getLogger("atommem")


def _setup_logging(verbose: bool) -> None:
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = RichHandler(console=err_console, show_path=False, rich_tracebacks=False)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.propagate = False


def _fail(error: Exception, title: str) -> typer.Exit:
    err_console.print(Panel(str(error), title=f"[red]{title}[/red]", border_style="red"))
    code = EXIT_INVALID_INPUT if isinstance(error, _INPUT_ERRORS) else EXIT_FAILURE
    return typer.Exit(code)


def _input_error(message: str) -> typer.Exit:
    err_console.print(Panel(message, title="[red]Input Error[/red]", border_style="red"))
    return typer.Exit(EXIT_INVALID_INPUT)


def _resolve_config(
    config_path: Optional[Path],
    chunk_size: Optional[int] = None,
    retrieve_k: Optional[int] = None,
    schema: Optional[SchemaKind] = None,
    endpoint: Optional[str] = None,
    temperature: Optional[float] = None,
) -> AtomMemConfig:
    """File (or ATOMMEM_CONFIG) values, overridden by any flag that was given."""
    base = load_config(config_path)
    data = base.model_dump(mode="json", by_alias=True)
    if chunk_size is not None:
        data["episode"]["chunk_size_tokens"] = chunk_size
    if retrieve_k is not None:
        data["episode"]["retrieve_k"] = retrieve_k
    if schema is not None:
        data["episode"]["schema"] = schema.value
    if endpoint is not None:
        data["policy"]["endpoint"] = endpoint
    if temperature is not None:
        data["policy"]["temperature"] = temperature
    try:
        return AtomMemConfig.model_validate(data)
    except ValidationError as e:
        field_errors = "; ".join(
            f"{' -> '.join(str(x) for x in err['loc'])}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigError(config_path or Path("<flags>"), f"Invalid flag values: {field_errors}") from e


ConfigOption = Annotated[
    Optional[Path],
    typer.Option("--config", "-c", dir_okay=False, help="TOML config file (default: $ATOMMEM_CONFIG)."),
]
ChunkSizeOption = Annotated[
    Optional[int], typer.Option("--chunk-size", help="Chunk budget C in tokens (default 4096).")
]
RetrieveKOption = Annotated[
    Optional[int], typer.Option("--retrieve-k", help="Entries retrieved per Read (default 6).")
]
SchemaOption = Annotated[
    Optional[SchemaKind], typer.Option("--schema", help="XML tag vocabulary (default table).")
]


@app.callback()
def main(
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging.")] = False,
) -> None:
    _setup_logging(verbose)


@app.command()
def build(
    source: Annotated[Path, typer.Argument(dir_okay=False, help="Source QA file (JSONL or JSON array).")],
    out: Annotated[Path, typer.Option("--out", "-o", dir_okay=False, help="Task JSONL to write.")],
    mode: Annotated[str, typer.Option("--mode", help="niah or multiq.")] = "niah",
    total_docs: Annotated[int, typer.Option("--total-docs", help="Documents per instance.")] = 200,
    n_instances: Annotated[int, typer.Option("--n", help="Number of instances.")] = 10,
    seed: Annotated[int, typer.Option("--seed", help="Root seed for every random stream.")] = 0,
    max_questions: Annotated[
        int, typer.Option("--max-questions", help="Upper bound of the uniform question count (multiq).")
    ] = MAX_QUESTIONS,
) -> None:
    """Build NIAH or multi-question task instances from a QA source."""
    if mode not in ("niah", "multiq"):
        raise _input_error(f"Unknown mode: [bold]{mode}[/bold]\nChoose niah or multiq.")
    if not source.exists():
        raise _input_error(f"File not found: [bold]{source}[/bold]")
    if total_docs < 1 or n_instances < 1:
        raise _input_error("--total-docs and --n must be positive.")

    try:
        report = load_sources(source)
        tasks = build_tasks(report.samples, mode, total_docs, n_instances, seed, max_questions)
        write_tasks(out, tasks)
    except AtomMemError as e:
        raise _fail(e, "Build Error")

    counter = WhitespaceTokenCounter()
    tokens = [counter.count("\n\n".join(t.document_texts)) for t in tasks]
    questions = [len(t.questions) for t in tasks]
    replaced = sum(1 for t in tasks if t.sampled_with_replacement)
    console.print(Panel(
        f"[bold green]Tasks written[/bold green]\n\n"
        f"  Source:     {len(report.samples)} samples ({report.skipped} rows skipped)\n"
        f"  Instances:  {len(tasks)} ({mode})\n"
        f"  Documents:  {np.mean([t.total_docs for t in tasks]):.1f} per instance\n"
        f"  Questions:  {min(questions)}..{max(questions)} per instance\n"
        f"  Tokens:     ~{np.mean(tokens):,.0f} per instance (estimate)\n"
        + (f"  [yellow]Distractors sampled with replacement in {replaced} instances[/yellow]\n" if replaced else "")
        + f"  Output:     [dim]{out}[/dim]",
        title="[green]Build Complete[/green]",
        border_style="green",
    ))


def _load_task_file(path: Path) -> list[TaskInstance]:
    if not path.exists():
        raise _input_error(f"File not found: [bold]{path}[/bold]")
    try:
        return load_tasks(path)
    except AtomMemError as e:
        raise _fail(e, "Task File Error")


@app.command()
def run(
    tasks_file: Annotated[Path, typer.Argument(dir_okay=False, help="Task JSONL from `atommem build`.")],
    out: Annotated[Path, typer.Option("--out", "-o", file_okay=False, help="Parent directory for run dirs.")] = Path("runs"),
    policy: Annotated[str, typer.Option("--policy", help="replay, heuristic or remote.")] = "heuristic",
    script: Annotated[
        Optional[Path], typer.Option("--script", dir_okay=False, help="Replay script JSON (replay policy).")
    ] = None,
    config_path: ConfigOption = None,
    chunk_size: ChunkSizeOption = None,
    retrieve_k: RetrieveKOption = None,
    schema: SchemaOption = None,
    endpoint: Annotated[Optional[str], typer.Option("--endpoint", help="Chat completion URL (remote).")] = None,
    temperature: Annotated[
        Optional[float], typer.Option("--temperature", help="Sampling temperature (default 0.7).")
    ] = None,
    seed: Annotated[int, typer.Option("--seed", help="Recorded in the run manifest.")] = 0,
    parallel: Annotated[int, typer.Option("--parallel", help="Episodes run concurrently.")] = 1,
    snapshots: Annotated[bool, typer.Option("--snapshots", help="Save final memory snapshots.")] = False,
) -> None:
    """Run every task with a policy and write transcripts to a run directory."""
    if policy not in ("replay", "heuristic", "remote"):
        raise _input_error(f"Unknown policy: [bold]{policy}[/bold]\nChoose replay, heuristic or remote.")
    if policy == "replay" and script is None:
        raise _input_error("--script is required with --policy replay.\nTip: create one with `atommem make-script`.")
    if parallel < 1:
        raise _input_error("--parallel must be >= 1.")

    tasks = _load_task_file(tasks_file)
    try:
        config = _resolve_config(config_path, chunk_size, retrieve_k, schema, endpoint, temperature)
        provider = make_provider(config.embedding)
        if policy == "replay":
            scripts = load_scripts(script)

            def policy_for(task: TaskInstance) -> Policy:
                return ReplayPolicy(scripts.get(task.task_id, []))
        else:
            shared = heuristic_policy(config.episode) if policy == "heuristic" else remote_policy(config.policy, config.episode)

            def policy_for(task: TaskInstance) -> Policy:
                return shared

        kind: PolicyKind = policy  # type: ignore[assignment]
        manifest = make_manifest(tasks_file, kind, config, out, seed=seed, script_file=script)
    except AtomMemError as e:
        raise _fail(e, "Run Error")

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        TimeElapsedColumn(),
        console=console,
    ) as progress:
        bar = progress.add_task("Running episodes...", total=len(tasks))

        def _on_done(task_id: str, ok: bool) -> None:
            progress.advance(bar)

        result = execute_run(
            tasks, policy_for, config, manifest, provider,
            parallel=parallel, snapshots=snapshots, on_done=_on_done,
        )

    if result.failed and not result.completed:
        err_console.print(Panel(
            f"All {result.total} episodes failed.\n"
            + "\n".join(f"  {tid}: {msg}" for tid, msg in sorted(result.failed.items())[:10]),
            title="[red]Run Failed[/red]",
            border_style="red",
        ))
        raise typer.Exit(EXIT_FAILURE)

    console.print(Panel(
        f"[bold green]Run complete[/bold green]\n\n"
        f"  Run id:     {manifest.run_id}\n"
        f"  Policy:     {policy}\n"
        f"  Episodes:   {len(result.completed)} completed, {len(result.failed)} failed\n"
        f"  Run dir:    [dim]{result.run_dir}[/dim]",
        title="[green]Run Complete[/green]" if not result.failed else "[yellow]Run Complete (partial)[/yellow]",
        border_style="green" if not result.failed else "yellow",
    ))


@app.command()
def score(
    run_dirs: Annotated[list[Path], typer.Argument(file_okay=False, help="One or more run directories.")],
    tasks_file: Annotated[
        Optional[Path], typer.Option("--tasks", dir_okay=False, help="Override the task file in the manifest.")
    ] = None,
) -> None:
    """Score run directories: per-instance EM, mean EM, action statistics."""
    try:
        summary = score_runs(run_dirs, tasks_file)
    except AtomMemError as e:
        raise _fail(e, "Score Error")

    table = Table(title="Exact match")
    table.add_column("Run")
    table.add_column("Run id")
    table.add_column("EM", justify="right")
    for entry in summary["runs"]:
        table.add_row(entry["run_dir"], entry["run_id"], f"{entry['em']:.4f}")
    if len(summary["runs"]) > 1:
        table.add_row("[bold]mean[/bold]", "", f"[bold]{summary['mean_em']:.4f}[/bold]")
    console.print(table)
    console.print(f"mean EM: {summary['mean_em']:.4f}")


@app.command()
def advantage(
    rewards_file: Annotated[Path, typer.Argument(dir_okay=False, help="JSON list or one reward per line.")],
    out: Annotated[Path, typer.Option("--out", "-o", dir_okay=False, help="Advantages JSONL to write.")],
    group_size: Annotated[int, typer.Option("--group-size", "-g", help="Rollouts per group (default 16).")] = GROUP_SIZE,
) -> None:
    """Mean-subtracted group advantages for a flat reward list."""
    if not rewards_file.exists():
        raise _input_error(f"File not found: [bold]{rewards_file}[/bold]")
    try:
        rewards = read_rewards(rewards_file)
    except (ValueError, OSError) as e:
        raise _input_error(f"Cannot read rewards from [bold]{rewards_file.name}[/bold]\n  Cause: {e}")
    try:
        groups = compute_group_advantages(rewards, group_size)
    except AtomMemError as e:
        raise _fail(e, "Advantage Error")

    lines = "".join(
        json.dumps({"group_id": g.group_id, "rewards": g.rewards, "advantages": g.advantages}, sort_keys=True) + "\n"
        for g in groups
    )
    write_bytes_atomic(out, lines.encode("utf-8"), suffix=".adv.tmp")
    console.print(f"[green]Advantages written:[/] {len(groups)} groups of {group_size} -> [dim]{out}[/dim]")


@app.command("make-script")
def make_script_cmd(
    tasks_file: Annotated[Path, typer.Argument(dir_okay=False, help="Task JSONL from `atommem build`.")],
    out: Annotated[Path, typer.Option("--out", "-o", dir_okay=False, help="Replay script JSON to write.")],
    kind: Annotated[str, typer.Option("--kind", help="gold, wrong or empty.")] = "gold",
    config_path: ConfigOption = None,
    chunk_size: ChunkSizeOption = None,
    schema: SchemaOption = None,
) -> None:
    """Write replay scripts that answer every task with gold, wrong or empty text."""
    if kind not in ("gold", "wrong", "empty"):
        raise _input_error(f"Unknown script kind: [bold]{kind}[/bold]\nChoose gold, wrong or empty.")
    tasks = _load_task_file(tasks_file)
    try:
        config = _resolve_config(config_path, chunk_size=chunk_size, schema=schema)
        scripts = {t.task_id: make_script(t, config.episode, kind) for t in tasks}  # type: ignore[arg-type]
        write_scripts(out, scripts)
    except AtomMemError as e:
        raise _fail(e, "Script Error")
    console.print(f"[green]Replay scripts written:[/] {len(scripts)} tasks ({kind}) -> [dim]{out}[/dim]")
