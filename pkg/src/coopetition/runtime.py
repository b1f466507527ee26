"""Event lifecycle: teams, timed attempts, the append-only ledger, leaderboards.

Every state change flows through one path: the public operation validates
against current state, builds a self-contained ledger entry, applies it
through the same dispatcher that replay uses, then appends it to the ledger.
Replaying a ledger therefore reproduces derived state exactly, byte for byte
in the serialized breakdowns.

Actors are team ids; role grants live on the Team record. The reserved actor
``"system"`` (boot, fixtures, CLI administration) carries every role.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Iterator

from .clock import format_ts, parse_ts
from .errors import (
    AttemptLimitExceeded,
    DeadlineExpired,
    DuplicateId,
    EventNotStarted,
    MutualExclusionViolation,
    NotFound,
    ParseError,
    SessionClosed,
    Unauthorized,
    ValidationError,
)
from .marketplace import (
    IntegrationDeclaration,
    Marketplace,
    ModuleCategory,
    ModuleKind,
    ModuleRecord,
    Scope,
    UploadWindow,
)
from .numeric import as_fraction
from .rulebook import Rulebook
from .scoring import (
    AttemptRecord,
    MilestoneResult,
    RoyaltyEntry,
    ScoreBreakdown,
    attempt_breakdown,
    best_attempt,
    challenge_score,
    coopetition_score,
    royalties_total,
)

SYSTEM_ACTOR = "system"


class Role(Enum):
    TEAM = "team"
    REFEREE = "referee"
    TECHNICAL_COMMITTEE = "technical_committee"
    EXTERNAL_EVALUATOR = "external_evaluator"


ALL_ROLES = frozenset(Role)


@dataclass(frozen=True)
class Team:
    id: str
    name: str
    institution: str
    league_id: str
    robot_description: str = ""
    roles: frozenset[Role] = frozenset({Role.TEAM})

    def __post_init__(self) -> None:
        object.__setattr__(self, "roles", frozenset(self.roles))


class SessionState(Enum):
    SETUP = "setup"
    RUNNING = "running"
    CLOSED = "closed"


@dataclass
class AttemptSession:
    """A timed task run; outcomes land here until the referee closes it."""

    id: str
    team_id: str
    league_id: str
    task_id: str
    attempt_number: int
    task_level: str
    started_at: datetime
    deadline: datetime
    state: SessionState = SessionState.RUNNING
    results: dict[str, MilestoneResult] = field(default_factory=dict)
    closed_at: datetime | None = None

    def record(self, milestone_order: Iterable[str]) -> AttemptRecord:
        ordered = tuple(
            self.results[ms_id] for ms_id in milestone_order if ms_id in self.results
        )
        return AttemptRecord(
            team_id=self.team_id,
            league_id=self.league_id,
            task_id=self.task_id,
            attempt_number=self.attempt_number,
            task_level=self.task_level,
            results=ordered,
            started_at=self.started_at,
            closed_at=self.closed_at,
        )


@dataclass(frozen=True)
class LeaderboardRow:
    team_id: str
    team_name: str
    challenge_points: Fraction
    royalty_points: Fraction
    coopetition_points: Fraction


class EventLedger:
    """Append-only NDJSON record of every state change.

    Entries are dicts with strictly increasing ``seq``; serialization is
    canonical (sorted keys, tight separators) so identical histories are
    identical bytes.
    """

    def __init__(self, path: str | Path | None = None) -> None:
        self._path = Path(path) if path is not None else None
        self._entries: list[dict] = []
        if self._path is not None and self._path.exists():
            for i, line in enumerate(self._path.read_text("utf-8").splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"{self._path}:{i}: invalid ledger line ({exc})") from exc
                self._entries.append(entry)
        self._check_sequence()

    def _check_sequence(self) -> None:
        for i, entry in enumerate(self._entries, start=1):
            if entry.get("seq") != i:
                raise ParseError(
                    f"ledger sequence broken: entry {i} carries seq {entry.get('seq')!r}"
                )

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[dict]:
        return iter(self._entries)

    @staticmethod
    def encode(entry: dict) -> str:
        return json.dumps(entry, sort_keys=True, separators=(",", ":"))

    def append(self, op: str, at: datetime, actor: str, data: dict) -> dict:
        entry = {
            "seq": len(self._entries) + 1,
            "at": format_ts(at),
            "actor": actor,
            "op": op,
            "data": data,
        }
        self._entries.append(entry)
        if self._path is not None:
            with self._path.open("a", encoding="utf-8") as handle:
                handle.write(self.encode(entry) + "\n")
        return entry


class CompetitionEvent:
    """Orchestrates one event: marketplace, sessions, and scoring views.

    Constructing over a non-empty ledger replays it; all public mutations
    append to the same ledger through a single code path.
    """

    def __init__(
        self,
        rulebook: Rulebook,
        ledger: EventLedger | None = None,
        auto_verify: bool = False,
    ) -> None:
        self.rulebook = rulebook
        self.ledger = ledger if ledger is not None else EventLedger()
        self.marketplace = Marketplace(rulebook, auto_verify=auto_verify)
        self._teams: dict[str, Team] = {}
        self._sessions: dict[str, AttemptSession] = {}
        for entry in self.ledger:
            self._apply(entry)

    # --- registry reads ---------------------------------------------------------

    def team(self, team_id: str) -> Team:
        team = self._teams.get(team_id)
        if team is None:
            raise NotFound(f"team {team_id!r} not found")
        return team

    def teams(self) -> list[Team]:
        return sorted(self._teams.values(), key=lambda t: t.id)

    def session(self, session_id: str) -> AttemptSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise NotFound(f"attempt {session_id!r} not found")
        return session

    def sessions(self) -> list[AttemptSession]:
        return [self._sessions[k] for k in sorted(self._sessions)]

    def _roles_of(self, actor: str) -> frozenset[Role]:
        if actor == SYSTEM_ACTOR:
            return ALL_ROLES
        team = self._teams.get(actor)
        return team.roles if team is not None else frozenset()

    def _require(self, actor: str, *roles: Role, allow_self: str | None = None) -> None:
        granted = self._roles_of(actor)
        if granted & set(roles):
            return
        if allow_self is not None and actor == allow_self and actor in self._teams:
            return
        names = ", ".join(sorted(role.value for role in roles))
        raise Unauthorized(f"actor {actor!r} lacks any of: {names}")

    def authorize(self, actor: str, *roles: Role) -> None:
        """Role gate for operations hosted outside the event state itself."""
        self._require(actor, *roles)

    # --- commands ---------------------------------------------------------------

    def register_team(self, team: Team, now: datetime, actor: str = SYSTEM_ACTOR) -> Team:
        self._require(actor, Role.TECHNICAL_COMMITTEE)
        if team.id in self._teams:
            raise DuplicateId(f"team id {team.id!r} already taken")
        self.rulebook.league(team.league_id)  # must exist
        entry_data = {
            "id": team.id,
            "name": team.name,
            "institution": team.institution,
            "league_id": team.league_id,
            "robot_description": team.robot_description,
            "roles": sorted(role.value for role in team.roles),
        }
        return self._commit("register_team", now, actor, entry_data)

    def add_upload_window(
        self, window: UploadWindow, now: datetime, actor: str = SYSTEM_ACTOR
    ) -> UploadWindow:
        self._require(actor, Role.TECHNICAL_COMMITTEE)
        if window.id in {w.id for w in self.marketplace.windows()}:
            raise DuplicateId(f"upload window {window.id!r} already exists")
        data = {
            "id": window.id,
            "opens_at": format_ts(window.opens_at),
            "closes_at": format_ts(window.closes_at),
        }
        return self._commit("add_window", now, actor, data)

    def upload_module(self, record: ModuleRecord, now: datetime, actor: str) -> ModuleRecord:
        if (
            actor != SYSTEM_ACTOR
            and Role.TECHNICAL_COMMITTEE not in self._roles_of(actor)
            and actor not in record.developer_team_ids
        ):
            raise Unauthorized(
                f"actor {actor!r} is not a developer of module {record.id!r}"
            )
        data = {
            "id": record.id,
            "name": record.name,
            "category": record.category.value,
            "kind": record.kind.value,
            "developer_team_ids": sorted(record.developer_team_ids),
            "royalty_rate": str(record.royalty_rate) if record.royalty_rate is not None else None,
            "description": record.description,
            "artifact_uri": record.artifact_uri,
            "now": format_ts(now),
        }
        return self._commit("upload_module", now, actor, data)

    def freeze_marketplace(self, at: datetime, actor: str = SYSTEM_ACTOR) -> datetime:
        self._require(actor, Role.TECHNICAL_COMMITTEE)
        return self._commit("freeze_marketplace", at, actor, {"at": format_ts(at)})

    def declare_integration(
        self, decl: IntegrationDeclaration, actor: str
    ) -> IntegrationDeclaration:
        self._require(actor, Role.TECHNICAL_COMMITTEE, allow_self=decl.user_team_id)
        data = {
            "id": decl.id,
            "user_team_id": decl.user_team_id,
            "module_id": decl.module_id,
            "league_id": decl.league_id,
            "task_id": decl.task_id,
            "milestone_id": decl.milestone_id,
            "declared_at": format_ts(decl.declared_at),
        }
        return self._commit("declare_integration", decl.declared_at, actor, data)

    def verify_declaration(
        self, decl_id: str, now: datetime, actor: str
    ) -> IntegrationDeclaration:
        self._require(actor, Role.REFEREE, Role.TECHNICAL_COMMITTEE)
        self.marketplace.declaration(decl_id)  # must exist
        return self._commit("verify_declaration", now, actor, {"id": decl_id})

    def remove_module(self, module_id: str, now: datetime, actor: str) -> ModuleRecord:
        roles = {role.value for role in self._roles_of(actor)}
        # Marketplace enforces the committee requirement; check before logging.
        self.marketplace.module(module_id)
        if "technical_committee" not in roles:
            raise Unauthorized("module removal requires the technical committee role")
        return self._commit("remove_module", now, actor, {"id": module_id})

    def open_attempt(
        self, team_id: str, task_id: str, task_level: str, now: datetime, actor: str
    ) -> AttemptSession:
        self._require(actor, Role.REFEREE, Role.TECHNICAL_COMMITTEE, allow_self=team_id)
        team = self.team(team_id)
        league = self.rulebook.league(team.league_id)
        league.task(task_id)  # must exist in the team's own league
        league.task_factor(task_level)  # must resolve
        if not self.marketplace.frozen:
            raise EventNotStarted("attempts open once the marketplace is frozen")
        used = sum(
            1
            for s in self._sessions.values()
            if s.team_id == team_id and s.task_id == task_id
        )
        if used >= league.attempt_limit:
            raise AttemptLimitExceeded(
                f"team {team_id!r} already opened {used} attempts on task {task_id!r}"
            )
        data = {
            "session_id": f"att-{len(self._sessions) + 1:04d}",
            "team_id": team_id,
            "league_id": team.league_id,
            "task_id": task_id,
            "attempt_number": used + 1,
            "task_level": task_level,
            "started_at": format_ts(now),
            "deadline": format_ts(now + timedelta(seconds=league.attempt_duration_s)),
        }
        return self._commit("open_attempt", now, actor, data)

    def record_milestone_outcome(
        self,
        session_id: str,
        result: MilestoneResult,
        now: datetime,
        actor: str,
        external_module_ids: Iterable[str] | None = None,
    ) -> AttemptSession:
        """Upsert one milestone outcome (referee only).

        External modules default to the team's verified declarations for this
        milestone; an explicit list narrows that set but cannot widen it.
        """
        self._require(actor, Role.REFEREE)
        session = self._open_session(session_id, now)
        league = self.rulebook.league(session.league_id)
        task = league.task(session.task_id)
        spec = task.milestone(result.milestone_id)
        spec.level_factor(result.level)  # CatalogMismatch surface is at close; fail fast here
        for penalty in result.penalties_incurred:
            spec.penalty_points(penalty)
        if result.success and spec.exclusive_group is not None:
            for other in session.results.values():
                other_spec = task.milestone(other.milestone_id)
                if (
                    other.success
                    and other.milestone_id != result.milestone_id
                    and other_spec.exclusive_group == spec.exclusive_group
                ):
                    raise MutualExclusionViolation(
                        f"milestones {other.milestone_id!r} and {result.milestone_id!r}"
                        " are mutually exclusive"
                    )

        declared = {
            record.id
            for record in self.marketplace.external_modules_for(
                session.team_id,
                Scope(session.league_id, session.task_id, result.milestone_id),
            )
        }
        if external_module_ids is None:
            modules = declared
        else:
            modules = set(external_module_ids) & declared
        data = {
            "session_id": session_id,
            "milestone_id": result.milestone_id,
            "success": result.success,
            "level": result.level,
            "subjective_score": str(result.subjective_score),
            "penalties_incurred": list(result.penalties_incurred),
            "external_module_ids": sorted(modules),
            "now": format_ts(now),
        }
        return self._commit("record_outcome", now, actor, data)

    def record_subjective_score(
        self, session_id: str, milestone_id: str, q: Fraction, now: datetime, actor: str
    ) -> AttemptSession:
        """Set q on an already-recorded outcome (referee or external evaluator)."""
        self._require(actor, Role.REFEREE, Role.EXTERNAL_EVALUATOR)
        session = self._open_session(session_id, now)
        if milestone_id not in session.results:
            raise NotFound(
                f"no outcome recorded yet for milestone {milestone_id!r} in {session_id!r}"
            )
        q = as_fraction(q)
        if not 0 <= q <= 10 or (q * 10).denominator != 1:
            raise ValidationError(f"subjective score {q} invalid")
        data = {
            "session_id": session_id,
            "milestone_id": milestone_id,
            "subjective_score": str(q),
            "now": format_ts(now),
        }
        return self._commit("record_subjective", now, actor, data)

    def close_attempt(self, session_id: str, now: datetime, actor: str) -> ScoreBreakdown:
        session = self.session(session_id)
        self._require(actor, Role.REFEREE, allow_self=session.team_id)
        if session.state is not SessionState.RUNNING:
            raise SessionClosed(f"attempt {session_id!r} is {session.state.value}")
        data = {"session_id": session_id, "closed_at": format_ts(now)}
        self._commit("close_attempt", now, actor, data)
        return self.attempt_score(session_id)

    def _open_session(self, session_id: str, now: datetime) -> AttemptSession:
        session = self.session(session_id)
        if session.state is not SessionState.RUNNING:
            raise SessionClosed(f"attempt {session_id!r} is {session.state.value}")
        if now > session.deadline:
            raise DeadlineExpired(
                f"attempt {session_id!r} deadline {format_ts(session.deadline)} passed"
            )
        return session

    # --- entry application (command path and replay share this) -------------------

    def _commit(self, op: str, at: datetime, actor: str, data: dict) -> Any:
        entry = {
            "seq": len(self.ledger) + 1,
            "at": format_ts(at),
            "actor": actor,
            "op": op,
            "data": data,
        }
        result = self._apply(entry)
        self.ledger.append(op, at, actor, data)
        return result

    def _apply(self, entry: dict) -> Any:
        op = entry["op"]
        data = entry["data"]
        if op == "register_team":
            team = Team(
                id=data["id"],
                name=data["name"],
                institution=data["institution"],
                league_id=data["league_id"],
                robot_description=data.get("robot_description", ""),
                roles=frozenset(Role(r) for r in data["roles"]),
            )
            self._teams[team.id] = team
            return team
        if op == "add_window":
            return self.marketplace.add_window(
                UploadWindow(
                    id=data["id"],
                    opens_at=parse_ts(data["opens_at"]),
                    closes_at=parse_ts(data["closes_at"]),
                )
            )
        if op == "upload_module":
            record = ModuleRecord(
                id=data["id"],
                name=data["name"],
                category=ModuleCategory(data["category"]),
                kind=ModuleKind(data["kind"]),
                developer_team_ids=frozenset(data["developer_team_ids"]),
                royalty_rate=as_fraction(data["royalty_rate"])
                if data["royalty_rate"] is not None
                else None,
                description=data.get("description", ""),
                artifact_uri=data.get("artifact_uri", ""),
            )
            return self.marketplace.upload_module(record, parse_ts(data["now"]))
        if op == "freeze_marketplace":
            return self.marketplace.freeze(parse_ts(data["at"]))
        if op == "declare_integration":
            return self.marketplace.declare_integration(
                IntegrationDeclaration(
                    id=data["id"],
                    user_team_id=data["user_team_id"],
                    module_id=data["module_id"],
                    league_id=data["league_id"],
                    task_id=data["task_id"],
                    milestone_id=data["milestone_id"],
                    declared_at=parse_ts(data["declared_at"]),
                )
            )
        if op == "verify_declaration":
            return self.marketplace.verify_declaration(data["id"])
        if op == "remove_module":
            return self.marketplace.remove_module(data["id"], {"technical_committee"})
        if op == "open_attempt":
            session = AttemptSession(
                id=data["session_id"],
                team_id=data["team_id"],
                league_id=data["league_id"],
                task_id=data["task_id"],
                attempt_number=data["attempt_number"],
                task_level=data["task_level"],
                started_at=parse_ts(data["started_at"]),
                deadline=parse_ts(data["deadline"]),
            )
            self._sessions[session.id] = session
            return session
        if op == "record_outcome":
            session = self._ledger_session(data["session_id"])
            result = MilestoneResult(
                milestone_id=data["milestone_id"],
                success=data["success"],
                level=data["level"],
                subjective_score=as_fraction(data["subjective_score"]),
                penalties_incurred=tuple(data["penalties_incurred"]),
                external_module_ids=frozenset(data["external_module_ids"]),
            )
            session.results[result.milestone_id] = result
            return session
        if op == "record_subjective":
            session = self._ledger_session(data["session_id"])
            prior = session.results[data["milestone_id"]]
            session.results[data["milestone_id"]] = MilestoneResult(
                milestone_id=prior.milestone_id,
                success=prior.success,
                level=prior.level,
                subjective_score=as_fraction(data["subjective_score"]),
                penalties_incurred=prior.penalties_incurred,
                external_module_ids=prior.external_module_ids,
            )
            return session
        if op == "close_attempt":
            session = self._ledger_session(data["session_id"])
            session.state = SessionState.CLOSED
            session.closed_at = parse_ts(data["closed_at"])
            return session
        raise ParseError(f"unknown ledger op {entry['op']!r}")

    def _ledger_session(self, session_id: str) -> AttemptSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise ParseError(f"ledger references unknown attempt {session_id!r}")
        return session

    # --- scoring views -------------------------------------------------------------

    def _session_breakdown(self, session: AttemptSession) -> ScoreBreakdown:
        league = self.rulebook.league(session.league_id)
        task = league.task(session.task_id)
        record = session.record(ms.id for ms in task.milestones)
        return attempt_breakdown(league, task, record, self.marketplace.scoring_view())

    def counted_breakdowns(self) -> dict[tuple[str, str], ScoreBreakdown]:
        """Best closed attempt per (team, task), scored."""
        closed: dict[tuple[str, str], list[AttemptSession]] = {}
        for session in self._sessions.values():
            if session.state is SessionState.CLOSED:
                closed.setdefault((session.team_id, session.task_id), []).append(session)
        counted = {}
        for (team_id, task_id), sessions in closed.items():
            league = self.rulebook.league(sessions[0].league_id)
            task = league.task(task_id)
            records = [s.record(ms.id for ms in task.milestones) for s in sessions]
            breakdowns = [self._session_breakdown(s) for s in sessions]
            winner = best_attempt(task, records, [b.task_points for b in breakdowns])
            counted[(team_id, task_id)] = breakdowns[records.index(winner)]
        return counted

    def royalty_entries(self) -> list[RoyaltyEntry]:
        """All royalty entries arising from counted attempts, event-wide."""
        counted = self.counted_breakdowns()
        entries: list[RoyaltyEntry] = []
        for key in sorted(counted):
            entries.extend(counted[key].royalties)
        return entries

    def team_totals(self, team_id: str) -> tuple[Fraction, Fraction, Fraction]:
        """(S_challenge, S_royalties, S_coopetition) for one team."""
        self.team(team_id)
        counted = self.counted_breakdowns()
        challenge = challenge_score(
            breakdown.task_points
            for (owner, _), breakdown in sorted(counted.items())
            if owner == team_id
        )
        royalties = royalties_total(
            entry
            for breakdown in (counted[key] for key in sorted(counted))
            for entry in breakdown.royalties
            if entry.developer_team_id == team_id
        )
        return challenge, royalties, coopetition_score(challenge, royalties)

    def attempt_score(self, session_id: str) -> ScoreBreakdown:
        """Breakdown for one attempt, with the team's current totals attached.

        Works on running sessions too (provisional, from results so far).
        """
        session = self.session(session_id)
        breakdown = self._session_breakdown(session)
        challenge, royalties, _ = self.team_totals(session.team_id)
        return breakdown.with_totals(challenge, royalties)

    def team_royalty_entries(self, team_id: str) -> list[RoyaltyEntry]:
        self.team(team_id)
        return [
            entry
            for entry in self.royalty_entries()
            if entry.developer_team_id == team_id
        ]

    def leaderboard(self, league_id: str) -> list[LeaderboardRow]:
        """League rows sorted by S_coopetition, then S_challenge, then team id."""
        self.rulebook.league(league_id)
        rows = []
        for team in self.teams():
            if team.league_id != league_id or Role.TEAM not in team.roles:
                continue
            challenge, royalties, total = self.team_totals(team.id)
            rows.append(
                LeaderboardRow(
                    team_id=team.id,
                    team_name=team.name,
                    challenge_points=challenge,
                    royalty_points=royalties,
                    coopetition_points=total,
                )
            )
        rows.sort(key=lambda r: (-r.coopetition_points, -r.challenge_points, r.team_id))
        return rows
