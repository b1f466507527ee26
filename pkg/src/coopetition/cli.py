"""Command-line entry points.

Every subcommand is an offline view over the same primitives the HTTP
service uses: rulebook loading, ledger replay, command generation, and
graph export. Options also read ``COOPETITION_*`` environment variables
(for example ``COOPETITION_SERVE_PORT``).
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import __version__
from .analytics import Phase, build_transfer_graph, export_graph
from .clock import parse_ts
from .commands import DEFAULT_DOMAIN, PinSet, command_payload, generate_orl, generate_srl
from .errors import CoopetitionError
from .fixtures import write_demo_dataset
from .marketplace import UploadWindow
from .rulebook import load_rulebook_file
from .runtime import CompetitionEvent, EventLedger
from .scoring import breakdown_payload

CONTEXT_SETTINGS = {
    "auto_envvar_prefix": "COOPETITION",
    "help_option_names": ["-h", "--help"],
}

_PHASES = {
    "pre": Phase.PRE_EVENT,
    "post": Phase.POST_EVENT,
    "pre_event": Phase.PRE_EVENT,
    "post_event": Phase.POST_EVENT,
}


def _load_rulebook(paths: tuple[str, ...]):
    from .service import load_configured_rulebook

    try:
        return load_configured_rulebook(tuple(paths))
    except CoopetitionError as exc:
        raise click.ClickException(str(exc))


def _replay(ledger_path: Path, rulebooks: tuple[str, ...]) -> CompetitionEvent:
    book = _load_rulebook(rulebooks)
    try:
        return CompetitionEvent(book, EventLedger(ledger_path))
    except CoopetitionError as exc:
        raise click.ClickException(str(exc))


@click.group(context_settings=CONTEXT_SETTINGS)
@click.version_option(__version__, prog_name="coopetition")
def main() -> None:
    """Competition management: rulebooks, marketplace, scoring, analytics."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option(
    "--data-dir",
    type=click.Path(path_type=Path),
    default=None,
    help="Directory for the event ledger and snapshots; omit for in-memory state.",
)
@click.option(
    "--rulebook",
    "rulebooks",
    multiple=True,
    type=click.Path(exists=True, dir_okay=False),
    help="League rulebook file; repeat to merge several. Defaults to the bundled set.",
)
@click.option(
    "--window",
    "windows",
    multiple=True,
    metavar="ID=OPENS/CLOSES",
    help="Upload window, e.g. w1=2024-06-01T00:00Z/2024-06-30T23:00Z.",
)
@click.option("--freeze-at", default=None, help="Marketplace freeze instant (ISO-8601).")
@click.option(
    "--trust-based/--verified-only",
    default=False,
    show_default=True,
    help="Treat integration declarations as verified without referee sign-off.",
)
@click.option("--seed", default=0, show_default=True, type=int, help="Default command-generation seed.")
@click.option("--admin-token", default=None, help="Bootstrap token with full privileges.")
@click.option(
    "--tokens-file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help='JSON file mapping tokens to principals ({"tokens": {...}}).',
)
def serve(host, port, data_dir, rulebooks, windows, freeze_at, trust_based, seed, admin_token, tokens_file):
    """Run the HTTP service until interrupted."""
    from .service import ServiceConfig
    from .service import serve as run_service

    parsed_windows = []
    for raw in windows:
        window_id, sep, span = raw.partition("=")
        opens, span_sep, closes = span.partition("/")
        if not (sep and span_sep and window_id):
            raise click.BadParameter(
                f"{raw!r} is not ID=OPENS/CLOSES", param_hint="--window"
            )
        try:
            parsed_windows.append(UploadWindow(window_id, parse_ts(opens), parse_ts(closes)))
        except CoopetitionError as exc:
            raise click.BadParameter(str(exc), param_hint="--window")

    tokens = {}
    if tokens_file is not None:
        try:
            document = json.loads(tokens_file.read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise click.BadParameter(str(exc), param_hint="--tokens-file")
        tokens = document.get("tokens", document)

    try:
        config = ServiceConfig(
            host=host,
            port=port,
            data_dir=data_dir,
            rulebook_paths=tuple(rulebooks),
            windows=tuple(parsed_windows),
            freeze_at=parse_ts(freeze_at) if freeze_at else None,
            trust_based=trust_based,
            seed=seed,
            admin_token=admin_token,
            tokens=tokens,
        )
        run_service(config)
    except CoopetitionError as exc:
        raise click.ClickException(str(exc))


@main.command("validate-rulebook")
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def validate_rulebook(path: Path) -> None:
    """Parse and check a rulebook file; exit nonzero on any violation."""
    try:
        book = load_rulebook_file(path)
    except (CoopetitionError, OSError) as exc:
        raise click.ClickException(str(exc))
    leagues = ", ".join(league.id for league in book.leagues)
    click.echo(f"ok: {path} defines {leagues}")


@main.group()
def score() -> None:
    """Offline scoring over ledger files."""


@score.command("replay")
@click.argument("ledger", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "--rulebook",
    "rulebooks",
    multiple=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Rulebook file(s) the ledger was recorded under; defaults to the bundled set.",
)
def score_replay(ledger: Path, rulebooks) -> None:
    """Recompute every breakdown and leaderboard from a ledger file.

    Output is canonical JSON: the same ledger always prints the same bytes.
    """
    event = _replay(ledger, rulebooks)
    document = {
        "entries": len(event.ledger),
        "leaderboards": {
            league.id: [
                {
                    "team_id": row.team_id,
                    "team_name": row.team_name,
                    "challenge_points": str(row.challenge_points),
                    "royalty_points": str(row.royalty_points),
                    "coopetition_points": str(row.coopetition_points),
                }
                for row in event.leaderboard(league.id)
            ]
            for league in event.rulebook.leagues
        },
        "attempts": {
            session.id: breakdown_payload(event.attempt_score(session.id))
            for session in event.sessions()
        },
    }
    click.echo(json.dumps(document, indent=2, sort_keys=True))


@main.group()
def command() -> None:
    """Deterministic task command generation."""


@command.command("generate")
@click.option("--league", type=click.Choice(["SRL", "ORL"]), required=True)
@click.option("--task", default=1, show_default=True, type=int, help="Task number (1-3).")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--base-kitchen", default=None, help="Robot's home kitchen (SRL only).")
@click.option(
    "--pin",
    "pins",
    multiple=True,
    metavar="KEY=VALUE",
    help="Fix one task variable; repeat for several. Lowers the task factor.",
)
def command_generate(league, task, seed, base_kitchen, pins) -> None:
    """Draw a command and print its text plus the full assignment as JSON."""
    mapping = {}
    for raw in pins:
        key, sep, value = raw.partition("=")
        if not sep or not key:
            raise click.BadParameter(f"{raw!r} is not KEY=VALUE", param_hint="--pin")
        mapping[key] = value
    try:
        pinset = PinSet(mapping)
        if league == "SRL":
            if base_kitchen is None:
                raise click.ClickException("SRL generation needs --base-kitchen")
            generated = generate_srl(DEFAULT_DOMAIN, task, base_kitchen, pinset, seed)
        else:
            generated = generate_orl(DEFAULT_DOMAIN, task, pinset, seed)
    except CoopetitionError as exc:
        raise click.ClickException(str(exc))
    click.echo(generated.text)
    click.echo(json.dumps(command_payload(generated), indent=2, sort_keys=True))


@main.group()
def graph() -> None:
    """Module-transfer graph tooling."""


@graph.command("export")
@click.option(
    "--ledger",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Event ledger to rebuild the graph from.",
)
@click.option(
    "--rulebook",
    "rulebooks",
    multiple=True,
    type=click.Path(exists=True, dir_okay=False),
)
@click.option(
    "--phase",
    type=click.Choice(sorted(_PHASES)),
    default="post_event",
    show_default=True,
)
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["json", "dot"]),
    default="json",
    show_default=True,
)
@click.option(
    "--output",
    type=click.Path(path_type=Path),
    default=None,
    help="Write to a file instead of stdout.",
)
@click.option(
    "--include-unverified",
    is_flag=True,
    help="Keep declared-but-unverified integrations in the graph.",
)
def graph_export(ledger, rulebooks, phase, fmt, output, include_unverified) -> None:
    """Export the transfer graph for one event phase."""
    event = _replay(ledger, rulebooks)
    try:
        full = build_transfer_graph(
            event, include_unverified=True if include_unverified else None
        )
        blob = export_graph(full.snapshot(_PHASES[phase]), fmt)
    except CoopetitionError as exc:
        raise click.ClickException(str(exc))
    if output is not None:
        output.write_bytes(blob)
        click.echo(f"wrote {output}")
    else:
        click.echo(blob.decode("utf-8").rstrip("\n"))


@main.group()
def fixtures() -> None:
    """Demo datasets."""


@fixtures.command("init")
@click.option(
    "--data-dir",
    required=True,
    type=click.Path(path_type=Path),
    help="Target directory for the demo ledger and token file.",
)
@click.option("--force", is_flag=True, help="Overwrite an existing dataset.")
def fixtures_init(data_dir: Path, force: bool) -> None:
    """Write the demo event dataset (three windows, 90 modules, 8 attempts)."""
    try:
        summary = write_demo_dataset(data_dir, force=force)
    except CoopetitionError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {summary.ledger_path}")
    click.echo(f"wrote {summary.tokens_path}")
    click.echo(
        f"teams={summary.teams} modules={summary.modules} "
        f"declarations={summary.declarations} attempts={summary.attempts}"
    )


if __name__ == "__main__":
    main()
