"""HTTP/JSON facade over the event runtime.

Every mutating endpoint authenticates a bearer token to a principal,
then delegates to the runtime, whose role checks decide 403s. State
changes all flow through the event ledger in the data directory, so a
restart (or an offline ``score replay``) reproduces exactly what the
API served. Responses carry a top-level ``schema_version``.
"""

from __future__ import annotations

import json
import secrets
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Mapping

from fastapi import FastAPI, Request
from fastapi.exceptions import HTTPException, RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from . import __version__
from .analytics import Phase, build_transfer_graph, export_graph, reuse_stats
from .clock import format_ts, utc_now
from .commands import DEFAULT_DOMAIN, PinSet, command_payload, generate_orl, generate_srl
from .errors import (
    AlreadyFrozen,
    AttemptLimitExceeded,
    ConfigError,
    CoopetitionError,
    DeadlineExpired,
    DuplicateId,
    EventNotStarted,
    FrozenMarketplace,
    ModuleRemoved,
    MutualExclusionViolation,
    NotFound,
    OutsideWindow,
    SessionClosed,
    Unauthorized,
    UnknownScope,
    ValidationError,
)
from .marketplace import (
    IntegrationDeclaration,
    ModuleCategory,
    ModuleKind,
    ModuleRecord,
    UploadWindow,
    declaration_payload,
    module_payload,
)
from .numeric import as_fraction, fraction_payload
from .rulebook import Rulebook, bundled_rulebook, load_rulebook_file, merge_rulebooks
from .runtime import (
    SYSTEM_ACTOR,
    AttemptSession,
    CompetitionEvent,
    EventLedger,
    LeaderboardRow,
    Role,
    Team,
)
from .scoring import MilestoneResult, breakdown_payload, royalties_total, royalty_payload

SCHEMA_VERSION = 1

LEDGER_FILENAME = "ledger.ndjson"
SNAPSHOT_FILENAME = "snapshot.json"


@dataclass(frozen=True)
class ServiceConfig:
    """Boot-time settings; everything else lives in the ledger."""

    host: str = "127.0.0.1"
    port: int = 8000
    data_dir: Path | None = None
    rulebook_paths: tuple[str, ...] = ()
    windows: tuple[UploadWindow, ...] = ()
    freeze_at: datetime | None = None
    trust_based: bool = False
    seed: int = 0
    admin_token: str | None = None
    tokens: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "rulebook_paths", tuple(self.rulebook_paths))
        object.__setattr__(self, "windows", tuple(self.windows))
        object.__setattr__(self, "tokens", dict(self.tokens))
        if self.data_dir is not None:
            object.__setattr__(self, "data_dir", Path(self.data_dir))


def load_configured_rulebook(paths: tuple[str, ...]) -> Rulebook:
    if not paths:
        return bundled_rulebook()
    try:
        books = [load_rulebook_file(path) for path in paths]
    except OSError as exc:
        raise ConfigError(f"cannot read rulebook: {exc}") from exc
    return books[0] if len(books) == 1 else merge_rulebooks(*books)


_CONFLICTS = (
    FrozenMarketplace,
    OutsideWindow,
    DuplicateId,
    AlreadyFrozen,
    ModuleRemoved,
    AttemptLimitExceeded,
    EventNotStarted,
    SessionClosed,
    DeadlineExpired,
    MutualExclusionViolation,
)


def _status_for(exc: CoopetitionError) -> int:
    if isinstance(exc, Unauthorized):
        return 403
    if isinstance(exc, (NotFound, UnknownScope)):
        return 404
    if isinstance(exc, _CONFLICTS):
        return 409
    return 400


def _error_response(status: int, error_type: str, detail: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={
            "schema_version": SCHEMA_VERSION,
            "error": {"type": error_type, "detail": detail},
        },
    )


class TeamIn(BaseModel):
    id: str
    name: str
    institution: str
    league_id: str
    robot_description: str = ""
    roles: list[str] = ["team"]


class ModuleIn(BaseModel):
    id: str
    name: str
    category: str
    kind: str = "software"
    developer_team_ids: list[str]
    royalty_rate: float | str | None = None
    description: str = ""
    artifact_uri: str = ""


class IntegrationIn(BaseModel):
    id: str | None = None
    user_team_id: str | None = None
    module_id: str
    league_id: str
    task_id: str
    milestone_id: str


class AttemptIn(BaseModel):
    team_id: str | None = None
    task_id: str
    task_level: str


class OutcomeIn(BaseModel):
    milestone_id: str
    success: bool | None = None
    level: str | None = None
    subjective_score: float | str | None = None
    penalties: list[str] = []
    external_module_ids: list[str] | None = None


class CommandIn(BaseModel):
    league_id: str
    task_number: int = 1
    base_kitchen: str | None = None
    pins: dict[str, str] = {}
    seed: int | None = None


def _enum_value(enum_type, raw: str, what: str):
    try:
        return enum_type(raw)
    except ValueError:
        options = ", ".join(member.value for member in enum_type)
        raise ValidationError(f"unknown {what} {raw!r}; expected one of: {options}")


def team_payload(team: Team) -> dict[str, Any]:
    return {
        "id": team.id,
        "name": team.name,
        "institution": team.institution,
        "league_id": team.league_id,
        "robot_description": team.robot_description,
        "roles": sorted(role.value for role in team.roles),
    }


def session_payload(session: AttemptSession) -> dict[str, Any]:
    return {
        "id": session.id,
        "team_id": session.team_id,
        "league_id": session.league_id,
        "task_id": session.task_id,
        "attempt_number": session.attempt_number,
        "task_level": session.task_level,
        "state": session.state.value,
        "started_at": format_ts(session.started_at),
        "deadline": format_ts(session.deadline),
        "closed_at": format_ts(session.closed_at) if session.closed_at else None,
        "results": [
            {
                "milestone_id": result.milestone_id,
                "success": result.success,
                "level": result.level,
                "subjective_score": fraction_payload(result.subjective_score),
                "penalties_incurred": list(result.penalties_incurred),
                "external_module_ids": sorted(result.external_module_ids),
            }
            for result in session.results.values()
        ],
    }


def leaderboard_payload(rows: list[LeaderboardRow]) -> list[dict[str, Any]]:
    return [
        {
            "team_id": row.team_id,
            "team_name": row.team_name,
            "challenge_points": fraction_payload(row.challenge_points),
            "royalty_points": fraction_payload(row.royalty_points),
            "coopetition_points": fraction_payload(row.coopetition_points),
        }
        for row in rows
    ]


def _write_snapshot(event: CompetitionEvent, data_dir: Path) -> None:
    document = {
        "schema_version": SCHEMA_VERSION,
        "written_at": format_ts(utc_now()),
        "leaderboards": {
            league.id: leaderboard_payload(event.leaderboard(league.id))
            for league in event.rulebook.leagues
        },
    }
    (data_dir / SNAPSHOT_FILENAME).write_text(
        json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    rulebook = load_configured_rulebook(config.rulebook_paths)
    if config.data_dir is not None:
        try:
            config.data_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"data directory unusable: {exc}") from exc
        ledger = EventLedger(config.data_dir / LEDGER_FILENAME)
    else:
        ledger = EventLedger()
    event = CompetitionEvent(rulebook, ledger, auto_verify=config.trust_based)

    existing = {window.id for window in event.marketplace.windows()}
    for window in config.windows:
        if window.id not in existing:
            event.add_upload_window(window, now=utc_now())

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        if config.data_dir is not None:
            _write_snapshot(event, config.data_dir)

    app = FastAPI(title="coopetition", version=__version__, lifespan=lifespan)
    app.state.event = event
    app.state.config = config
    app.state.lock = threading.Lock()
    app.state.tokens = dict(config.tokens)
    if config.admin_token:
        app.state.tokens[config.admin_token] = SYSTEM_ACTOR

    @app.exception_handler(CoopetitionError)
    async def domain_error(request: Request, exc: CoopetitionError):
        return _error_response(_status_for(exc), type(exc).__name__, str(exc))

    @app.exception_handler(RequestValidationError)
    async def body_error(request: Request, exc: RequestValidationError):
        return _error_response(400, "ValidationError", str(exc.errors()))

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException):
        return _error_response(exc.status_code, "AuthenticationRequired", str(exc.detail))

    def actor_of(request: Request) -> str:
        header = request.headers.get("authorization", "")
        scheme, _, token = header.partition(" ")
        if scheme.lower() != "bearer" or not token.strip():
            raise HTTPException(401, "missing bearer token")
        principal = app.state.tokens.get(token.strip())
        if principal is None:
            raise HTTPException(401, "unknown token")
        return principal

    def maybe_freeze() -> None:
        if (
            config.freeze_at is not None
            and not event.marketplace.frozen
            and utc_now() >= config.freeze_at
        ):
            event.freeze_marketplace(config.freeze_at)

    def envelope(**body: Any) -> dict[str, Any]:
        return {"schema_version": SCHEMA_VERSION, **body}

    # --- health and registry ------------------------------------------------

    @app.get("/health")
    def health():
        return envelope(status="ok", version=__version__)

    @app.post("/teams", status_code=201)
    def register_team(body: TeamIn, request: Request):
        actor = actor_of(request)
        roles = frozenset(_enum_value(Role, raw, "role") for raw in body.roles)
        team = Team(
            id=body.id,
            name=body.name,
            institution=body.institution,
            league_id=body.league_id,
            robot_description=body.robot_description,
            roles=roles,
        )
        with app.state.lock:
            registered = event.register_team(team, now=utc_now(), actor=actor)
            token = secrets.token_hex(16)
            app.state.tokens[token] = registered.id
        return envelope(team=team_payload(registered), token=token)

    @app.get("/teams")
    def list_teams():
        return envelope(teams=[team_payload(team) for team in event.teams()])

    # --- marketplace ----------------------------------------------------------

    @app.post("/modules", status_code=201)
    def upload_module(body: ModuleIn, request: Request):
        actor = actor_of(request)
        record = ModuleRecord(
            id=body.id,
            name=body.name,
            category=_enum_value(ModuleCategory, body.category, "category"),
            kind=_enum_value(ModuleKind, body.kind, "kind"),
            developer_team_ids=frozenset(body.developer_team_ids),
            royalty_rate=(
                as_fraction(body.royalty_rate) if body.royalty_rate is not None else None
            ),
            description=body.description,
            artifact_uri=body.artifact_uri,
        )
        with app.state.lock:
            maybe_freeze()
            stored = event.upload_module(record, now=utc_now(), actor=actor)
        return envelope(module=module_payload(stored))

    @app.get("/modules")
    def list_modules(category: str | None = None, developer: str | None = None):
        chosen = (
            _enum_value(ModuleCategory, category, "category") if category else None
        )
        records = event.marketplace.list_modules(
            category=chosen, developer_team_id=developer
        )
        return envelope(modules=[module_payload(record) for record in records])

    @app.post("/modules/{module_id}/remove")
    def remove_module(module_id: str, request: Request):
        actor = actor_of(request)
        with app.state.lock:
            removed = event.remove_module(module_id, now=utc_now(), actor=actor)
        return envelope(module=module_payload(removed))

    @app.post("/integrations", status_code=201)
    def declare_integration(body: IntegrationIn, request: Request):
        actor = actor_of(request)
        with app.state.lock:
            maybe_freeze()
            decl_id = body.id or f"decl-{len(event.marketplace.list_declarations()) + 1:04d}"
            declaration = IntegrationDeclaration(
                id=decl_id,
                user_team_id=body.user_team_id or actor,
                module_id=body.module_id,
                league_id=body.league_id,
                task_id=body.task_id,
                milestone_id=body.milestone_id,
                declared_at=utc_now(),
            )
            stored = event.declare_integration(declaration, actor=actor)
        return envelope(declaration=declaration_payload(stored))

    @app.post("/integrations/{decl_id}/verify")
    def verify_integration(decl_id: str, request: Request):
        actor = actor_of(request)
        with app.state.lock:
            verified = event.verify_declaration(decl_id, now=utc_now(), actor=actor)
        return envelope(declaration=declaration_payload(verified))

    # --- attempts ---------------------------------------------------------------

    @app.post("/attempts", status_code=201)
    def open_attempt(body: AttemptIn, request: Request):
        actor = actor_of(request)
        with app.state.lock:
            maybe_freeze()
            session = event.open_attempt(
                body.team_id or actor,
                body.task_id,
                body.task_level,
                now=utc_now(),
                actor=actor,
            )
        return envelope(session=session_payload(session))

    @app.post("/attempts/{session_id}/outcomes")
    def record_outcome(session_id: str, body: OutcomeIn, request: Request):
        actor = actor_of(request)
        with app.state.lock:
            if body.success is None and body.level is None:
                if body.subjective_score is None:
                    raise ValidationError(
                        "outcome needs success and level, or a subjective_score"
                    )
                session = event.record_subjective_score(
                    session_id,
                    body.milestone_id,
                    as_fraction(body.subjective_score),
                    now=utc_now(),
                    actor=actor,
                )
            else:
                if body.success is None or body.level is None:
                    raise ValidationError("success and level go together")
                result = MilestoneResult(
                    milestone_id=body.milestone_id,
                    success=body.success,
                    level=body.level,
                    subjective_score=(
                        as_fraction(body.subjective_score)
                        if body.subjective_score is not None
                        else 0
                    ),
                    penalties_incurred=tuple(body.penalties),
                )
                session = event.record_milestone_outcome(
                    session_id,
                    result,
                    now=utc_now(),
                    actor=actor,
                    external_module_ids=body.external_module_ids,
                )
        return envelope(session=session_payload(session))

    @app.post("/attempts/{session_id}/close")
    def close_attempt(session_id: str, request: Request):
        actor = actor_of(request)
        with app.state.lock:
            breakdown = event.close_attempt(session_id, now=utc_now(), actor=actor)
        return envelope(score=breakdown_payload(breakdown))

    @app.get("/attempts/{session_id}/score")
    def attempt_score(session_id: str):
        session = event.session(session_id)
        breakdown = event.attempt_score(session_id)
        return envelope(score=breakdown_payload(breakdown), session=session_payload(session))

    # --- standings and analytics ----------------------------------------------

    @app.get("/leaderboard/{league_id}")
    def leaderboard(league_id: str):
        rows = event.leaderboard(league_id)
        return envelope(league_id=league_id, rows=leaderboard_payload(rows))

    @app.get("/teams/{team_id}/royalties")
    def team_royalties(team_id: str):
        entries = event.team_royalty_entries(team_id)
        return envelope(
            team_id=team_id,
            entries=[royalty_payload(entry) for entry in entries],
            total=fraction_payload(royalties_total(entries)),
        )

    @app.post("/commands/generate")
    def generate_command(body: CommandIn, request: Request):
        actor = actor_of(request)
        event.authorize(actor, Role.REFEREE, Role.TECHNICAL_COMMITTEE)
        seed = body.seed if body.seed is not None else config.seed
        pins = PinSet(body.pins)
        if body.league_id == "SRL":
            if body.base_kitchen is None:
                raise ValidationError("SRL generation needs base_kitchen")
            command = generate_srl(
                DEFAULT_DOMAIN, body.task_number, body.base_kitchen, pins, seed
            )
        elif body.league_id == "ORL":
            command = generate_orl(DEFAULT_DOMAIN, body.task_number, pins, seed)
        else:
            raise ValidationError(
                f"no command generation for league {body.league_id!r}; use SRL or ORL"
            )
        return envelope(command=command_payload(command))

    @app.get("/graph")
    def graph(phase: str = "post_event", format: str = "json"):
        chosen = _enum_value(Phase, phase, "phase")
        snapshot = build_transfer_graph(event).snapshot(chosen)
        blob = export_graph(snapshot, format)
        if format == "dot":
            return Response(content=blob, media_type="text/vnd.graphviz")
        return envelope(phase=chosen.value, graph=json.loads(blob))

    @app.get("/stats")
    def stats():
        usage = reuse_stats(event)
        frozen_at = event.marketplace.frozen_at
        return envelope(
            stats={
                "modules_total": usage.modules_total,
                "uploads_per_window": usage.uploads_per_window,
                "integrations_per_category": usage.integrations_per_category,
                "integrations_per_league": usage.integrations_per_league,
                "connected_components": usage.connected_components,
                "marketplace": {
                    "frozen": event.marketplace.frozen,
                    "frozen_at": format_ts(frozen_at) if frozen_at else None,
                },
            }
        )

    return app


def serve(config: ServiceConfig) -> None:
    """Run the API until interrupted; the ledger is flushed per write."""
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port)
