"""Score computation: milestones, tasks, royalties, and totals.

Everything here is a pure function of its inputs, computed in exact rational
arithmetic (`fractions.Fraction`). Rounding happens only at presentation,
via :mod:`coopetition.numeric`.

The milestone score for a successful result is

    l * (b * (1 + q/50) - p)

multiplied by 10 when at least one verified external module was used
(the transfer bonus). Failed milestones score 0. The task score applies the
team-chosen task factor T, clamps each milestone at 0, and withholds the
royalty share for transferred milestones:

    S_task = T * sum_n (1 - I_n * (sum_k r_k) / M_n) * max(0, MS_n)

Each developer of module k receives (1/M_n) * (r_k / c_k) * max(0, MS_n),
where c_k is the number of co-developing teams. The payout deliberately does
not scale with T, so a user's deduction equals T times the total payout.

A team's coopetition score is its challenge score (best attempt per task,
summed) plus the royalties collected across all leagues, teams, and tasks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timezone
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import (
    CatalogMismatch,
    EmptyAttempts,
    MutualExclusionViolation,
    NotFound,
    SelfRoyalty,
    ValidationError,
)
from .numeric import as_fraction, fraction_payload
from .rulebook import LeagueSpec, MilestoneSpec, TaskSpec
from .clock import format_ts

_LATEST = datetime.max.replace(tzinfo=timezone.utc)


# --- inputs -------------------------------------------------------------------


@dataclass(frozen=True)
class MilestoneResult:
    """One referee-recorded milestone outcome within an attempt.

    ``external_module_ids`` holds the verified marketplace modules the team
    integrated for this milestone; a non-empty set is what triggers the
    transfer bonus and the royalty flow.
    """

    milestone_id: str
    success: bool
    level: str
    subjective_score: Fraction = Fraction(0)
    penalties_incurred: tuple[str, ...] = ()
    external_module_ids: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        q = as_fraction(self.subjective_score)
        if not 0 <= q <= 10:
            raise ValidationError(f"subjective score {q} outside [0, 10]")
        if (q * 10).denominator != 1:
            raise ValidationError(f"subjective score {q} finer than one decimal place")
        object.__setattr__(self, "subjective_score", q)
        object.__setattr__(self, "penalties_incurred", tuple(self.penalties_incurred))
        object.__setattr__(self, "external_module_ids", frozenset(self.external_module_ids))

    @property
    def transfer(self) -> bool:
        return bool(self.external_module_ids)


@dataclass(frozen=True)
class AttemptRecord:
    """One timed run of a task; ``task_level`` names the chosen T level."""

    team_id: str
    league_id: str
    task_id: str
    attempt_number: int
    task_level: str
    results: tuple[MilestoneResult, ...] = ()
    started_at: datetime | None = None
    closed_at: datetime | None = None

    def __post_init__(self) -> None:
        if self.attempt_number < 1:
            raise ValidationError(f"attempt number {self.attempt_number} must be >= 1")
        object.__setattr__(self, "results", tuple(self.results))


@dataclass(frozen=True)
class ModuleUse:
    """Marketplace view of one module: its rate and who developed it."""

    module_id: str
    royalty_rate: Fraction
    developer_team_ids: frozenset[str]

    def __post_init__(self) -> None:
        rate = as_fraction(self.royalty_rate)
        if not 0 <= rate <= 1:
            raise ValidationError(f"royalty rate {rate} outside [0, 1]")
        developers = frozenset(self.developer_team_ids)
        if not developers:
            raise ValidationError(f"module {self.module_id!r} has no developers")
        object.__setattr__(self, "royalty_rate", rate)
        object.__setattr__(self, "developer_team_ids", developers)


ModuleCatalog = Mapping[str, ModuleUse]


# --- outputs ------------------------------------------------------------------


@dataclass(frozen=True)
class MilestoneLine:
    milestone_id: str
    points: Fraction  # MS_n, may be negative
    retention: Fraction  # 1 - I_n * (sum r_k) / M_n
    contribution: Fraction  # T * retention * max(0, MS_n)
    transfer: bool


@dataclass(frozen=True)
class RoyaltyEntry:
    """Points flowing to one developer for one module use at one milestone."""

    developer_team_id: str
    user_team_id: str
    league_id: str
    task_id: str
    milestone_id: str
    module_id: str
    amount: Fraction

    def __post_init__(self) -> None:
        if self.developer_team_id == self.user_team_id:
            raise SelfRoyalty(f"team {self.user_team_id!r} cannot earn from its own score")
        if self.amount < 0:
            raise ValidationError("royalty amount must be >= 0")


@dataclass(frozen=True)
class ScoreBreakdown:
    """Per-attempt scoring detail; totals are filled once all tasks are in."""

    team_id: str
    league_id: str
    task_id: str
    attempt_number: int
    task_factor: Fraction
    milestones: tuple[MilestoneLine, ...]
    task_points: Fraction
    royalties: tuple[RoyaltyEntry, ...]
    challenge_points: Fraction | None = None
    royalty_points: Fraction | None = None
    coopetition_points: Fraction | None = None

    def with_totals(
        self, challenge: Fraction, royalty: Fraction
    ) -> "ScoreBreakdown":
        return replace(
            self,
            challenge_points=challenge,
            royalty_points=royalty,
            coopetition_points=challenge + royalty,
        )


# --- milestone score ------------------------------------------------------------


def subjective_factor(q: Fraction) -> Fraction:
    """The referee-quality multiplier 1 + q/50, in [1, 1.2] for q in [0, 10]."""
    return 1 + as_fraction(q) / 50


def milestone_score(
    spec: MilestoneSpec, result: MilestoneResult, *, transfer: bool | None = None
) -> Fraction:
    """MS_n for one milestone result; may be negative when penalties exceed b.

    ``transfer`` overrides the result's own module set; callers with a
    marketplace catalog pass the effective flag so that modules co-developed
    by the user never count as external.
    """
    if result.milestone_id != spec.id:
        raise CatalogMismatch(
            f"result for {result.milestone_id!r} scored against spec {spec.id!r}"
        )
    try:
        level = spec.level_factor(result.level)
        penalty = sum(spec.penalty_points(p) for p in result.penalties_incurred)
    except NotFound as exc:
        raise CatalogMismatch(str(exc)) from exc
    if not result.success:
        return Fraction(0)
    score = level * (spec.base_score * subjective_factor(result.subjective_score) - penalty)
    if result.transfer if transfer is None else transfer:
        score *= 10
    return score


# --- task score -----------------------------------------------------------------


def _external_modules(
    user_team_id: str, result: MilestoneResult, modules: ModuleCatalog
) -> list[ModuleUse]:
    """Resolve a result's module ids, dropping any the user co-developed."""
    uses = []
    for module_id in sorted(result.external_module_ids):
        use = modules.get(module_id)
        if use is None:
            raise CatalogMismatch(f"module {module_id!r} missing from marketplace view")
        if user_team_id not in use.developer_team_ids:
            uses.append(use)
    return uses


def _check_exclusives(task: TaskSpec, results: Sequence[MilestoneResult]) -> None:
    succeeded: dict[str, str] = {}
    for result in results:
        spec = task.milestone(result.milestone_id)
        if spec.exclusive_group is None or not result.success:
            continue
        if spec.exclusive_group in succeeded:
            raise MutualExclusionViolation(
                f"milestones {succeeded[spec.exclusive_group]!r} and {result.milestone_id!r}"
                f" are mutually exclusive in task {task.id!r}"
            )
        succeeded[spec.exclusive_group] = result.milestone_id


def attempt_breakdown(
    league: LeagueSpec,
    task: TaskSpec,
    attempt: AttemptRecord,
    modules: ModuleCatalog,
) -> ScoreBreakdown:
    """Score one attempt end to end: milestone lines, S_task, royalty entries.

    Totals (challenge, royalties, coopetition) are left unset; they depend on
    the team's other tasks and are attached by the caller.
    """
    if attempt.task_id != task.id:
        raise ValidationError(f"attempt targets {attempt.task_id!r}, scored against {task.id!r}")
    if attempt.attempt_number > league.attempt_limit:
        raise ValidationError(
            f"attempt number {attempt.attempt_number} exceeds limit {league.attempt_limit}"
        )
    seen: set[str] = set()
    for result in attempt.results:
        if result.milestone_id in seen:
            raise ValidationError(f"duplicate result for milestone {result.milestone_id!r}")
        seen.add(result.milestone_id)
    _check_exclusives(task, attempt.results)

    task_factor = league.task_factor(attempt.task_level)
    lines = []
    entries = []
    total = Fraction(0)
    for result in attempt.results:
        spec = task.milestone(result.milestone_id)
        uses = _external_modules(attempt.team_id, result, modules)
        points = milestone_score(spec, result, transfer=bool(uses))
        clamped = max(Fraction(0), points)
        retention = Fraction(1)
        if uses:
            rate_sum = sum((use.royalty_rate for use in uses), Fraction(0))
            retention = 1 - rate_sum / len(uses)
            for use in uses:
                share = clamped * use.royalty_rate / (len(uses) * len(use.developer_team_ids))
                if share == 0:
                    continue
                for developer in sorted(use.developer_team_ids):
                    entries.append(
                        RoyaltyEntry(
                            developer_team_id=developer,
                            user_team_id=attempt.team_id,
                            league_id=attempt.league_id,
                            task_id=attempt.task_id,
                            milestone_id=result.milestone_id,
                            module_id=use.module_id,
                            amount=share,
                        )
                    )
        contribution = task_factor * retention * clamped
        lines.append(
            MilestoneLine(
                milestone_id=result.milestone_id,
                points=points,
                retention=retention,
                contribution=contribution,
                transfer=bool(uses),
            )
        )
        total += contribution

    return ScoreBreakdown(
        team_id=attempt.team_id,
        league_id=attempt.league_id,
        task_id=attempt.task_id,
        attempt_number=attempt.attempt_number,
        task_factor=task_factor,
        milestones=tuple(lines),
        task_points=total,
        royalties=tuple(entries),
    )


def task_score(
    league: LeagueSpec,
    task: TaskSpec,
    attempt: AttemptRecord,
    modules: ModuleCatalog,
) -> tuple[Fraction, dict[str, Fraction]]:
    """S_task plus the per-milestone retention factors."""
    breakdown = attempt_breakdown(league, task, attempt, modules)
    return breakdown.task_points, {
        line.milestone_id: line.retention for line in breakdown.milestones
    }


# --- attempt selection and totals -------------------------------------------------


def _penalty_points(task: TaskSpec, attempt: AttemptRecord) -> int:
    total = 0
    for result in attempt.results:
        spec = task.milestone(result.milestone_id)
        try:
            total += sum(spec.penalty_points(p) for p in result.penalties_incurred)
        except NotFound as exc:
            raise CatalogMismatch(str(exc)) from exc
    return total


def best_attempt(
    task: TaskSpec,
    attempts: Sequence[AttemptRecord],
    scores: Sequence[Fraction],
) -> AttemptRecord:
    """The attempt that counts: highest S_task, then fewest penalty points,
    then earliest close."""
    if not attempts:
        raise EmptyAttempts("no attempts to select from")
    if len(attempts) != len(scores):
        raise ValidationError("one score per attempt required")
    teams = {a.team_id for a in attempts}
    tasks = {a.task_id for a in attempts}
    if len(teams) > 1 or len(tasks) > 1:
        raise ValidationError("attempts span multiple teams or tasks")

    def rank(pair: tuple[AttemptRecord, Fraction]) -> tuple:
        attempt, score = pair
        closed = attempt.closed_at if attempt.closed_at is not None else _LATEST
        return (-score, _penalty_points(task, attempt), closed)

    return min(zip(attempts, scores), key=rank)[0]


def challenge_score(task_scores: Iterable[Fraction]) -> Fraction:
    """S_challenge: the plain sum of best-attempt task scores."""
    return sum(task_scores, Fraction(0))


def royalty_for_developer(
    developer_team_id: str,
    task: TaskSpec,
    attempt: AttemptRecord,
    modules: ModuleCatalog,
) -> list[RoyaltyEntry]:
    """Royalty entries one developer earns from a user team's counted attempt."""
    if developer_team_id == attempt.team_id:
        raise SelfRoyalty(f"team {developer_team_id!r} cannot earn from its own attempt")
    entries = []
    for result in attempt.results:
        spec = task.milestone(result.milestone_id)
        uses = _external_modules(attempt.team_id, result, modules)
        if not uses:
            continue
        clamped = max(Fraction(0), milestone_score(spec, result, transfer=True))
        if clamped == 0:
            continue
        for use in uses:
            if developer_team_id not in use.developer_team_ids:
                continue
            amount = clamped * use.royalty_rate / (len(uses) * len(use.developer_team_ids))
            if amount == 0:
                continue
            entries.append(
                RoyaltyEntry(
                    developer_team_id=developer_team_id,
                    user_team_id=attempt.team_id,
                    league_id=attempt.league_id,
                    task_id=attempt.task_id,
                    milestone_id=result.milestone_id,
                    module_id=use.module_id,
                    amount=amount,
                )
            )
    return entries


def royalties_total(entries: Iterable[RoyaltyEntry]) -> Fraction:
    """S_royalties: sum of a developer's entries across leagues, teams, tasks."""
    return sum((entry.amount for entry in entries), Fraction(0))


def coopetition_score(s_challenge: Fraction, s_royalties: Fraction) -> Fraction:
    return s_challenge + s_royalties


# --- serialization ----------------------------------------------------------------


def royalty_payload(entry: RoyaltyEntry) -> dict:
    return {
        "developer_team_id": entry.developer_team_id,
        "user_team_id": entry.user_team_id,
        "league_id": entry.league_id,
        "task_id": entry.task_id,
        "milestone_id": entry.milestone_id,
        "module_id": entry.module_id,
        "amount": fraction_payload(entry.amount),
    }


def breakdown_payload(breakdown: ScoreBreakdown) -> dict:
    """JSON-compatible tree: decimal strings at 2 places plus exact rationals."""
    payload = {
        "team_id": breakdown.team_id,
        "league_id": breakdown.league_id,
        "task_id": breakdown.task_id,
        "attempt_number": breakdown.attempt_number,
        "task_factor": fraction_payload(breakdown.task_factor),
        "milestones": [
            {
                "milestone_id": line.milestone_id,
                "points": fraction_payload(line.points),
                "retention": fraction_payload(line.retention),
                "contribution": fraction_payload(line.contribution),
                "transfer": line.transfer,
            }
            for line in breakdown.milestones
        ],
        "task_points": fraction_payload(breakdown.task_points),
        "royalties": [royalty_payload(entry) for entry in breakdown.royalties],
    }
    for name in ("challenge_points", "royalty_points", "coopetition_points"):
        value = getattr(breakdown, name)
        if value is not None:
            payload[name] = fraction_payload(value)
    return payload


def attempt_payload(attempt: AttemptRecord) -> dict:
    return {
        "team_id": attempt.team_id,
        "league_id": attempt.league_id,
        "task_id": attempt.task_id,
        "attempt_number": attempt.attempt_number,
        "task_level": attempt.task_level,
        "results": [
            {
                "milestone_id": result.milestone_id,
                "success": result.success,
                "level": result.level,
                "subjective_score": fraction_payload(result.subjective_score),
                "penalties_incurred": list(result.penalties_incurred),
                "external_module_ids": sorted(result.external_module_ids),
            }
            for result in attempt.results
        ],
        "started_at": format_ts(attempt.started_at) if attempt.started_at else None,
        "closed_at": format_ts(attempt.closed_at) if attempt.closed_at else None,
    }
