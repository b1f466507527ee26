"""League rulebooks: the static catalog of tasks, milestones, and factors.

A rulebook is pure data loaded from a JSON-compatible document tree. Each
league carries its task list, the catalog of task conditional levels (the
``T`` factors teams trade feasibility against), a default royalty rate, and
the attempt budget. Each milestone carries its base score, the conditional
levels (``l`` factors), and the penalty catalog.

Leagues may attach conditional levels and penalties either inline on a
milestone or in type-keyed catalogs (``level_catalogs`` / ``penalty_catalogs``)
that the loader expands into every milestone of that type. Both shapes load
to the same fully-expanded :class:`MilestoneSpec`.

Rulebooks are immutable after load and safe to share across threads.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import NotFound, ParseError, ValidationError
from .numeric import as_fraction

BUNDLED_LEAGUE_FILES = ("irl.json", "srl.json", "orl.json")


class MilestoneType(Enum):
    NAVIGATION = "navigation"
    COMMAND_UNDERSTANDING = "command_understanding"
    MANIPULATION = "manipulation"
    PERCEPTION = "perception"
    OTHER = "other"


# Object detection milestones share the perception level catalog.
_TYPE_ALIASES = {
    "object_detection": MilestoneType.PERCEPTION,
    "perception_object_detection": MilestoneType.PERCEPTION,
}


class RulebookWarning(UserWarning):
    """Non-fatal rulebook diagnostics (e.g. no full-autonomy level)."""


@dataclass(frozen=True)
class ConditionalLevel:
    description: str
    factor: Fraction  # in [0, 1]


@dataclass(frozen=True)
class PenaltySpec:
    description: str
    points: int  # >= 0, charged per occurrence


@dataclass(frozen=True)
class TaskLevel:
    """A task conditional level: the T factor for a parameter simplification."""

    description: str
    factor: Fraction  # in [0, 1]


@dataclass(frozen=True)
class MilestoneSpec:
    id: str
    number: int
    description: str
    milestone_type: MilestoneType
    base_score: int
    conditional_levels: tuple[ConditionalLevel, ...]
    penalties: tuple[PenaltySpec, ...] = ()
    exclusive_group: str | None = None

    def level_factor(self, description: str) -> Fraction:
        for level in self.conditional_levels:
            if level.description == description:
                return level.factor
        raise NotFound(f"milestone {self.id!r} has no conditional level {description!r}")

    def penalty_points(self, description: str) -> int:
        for penalty in self.penalties:
            if penalty.description == description:
                return penalty.points
        raise NotFound(f"milestone {self.id!r} has no penalty {description!r}")


@dataclass(frozen=True)
class TaskSpec:
    id: str
    name: str
    milestones: tuple[MilestoneSpec, ...]

    def milestone(self, milestone_id: str) -> MilestoneSpec:
        for spec in self.milestones:
            if spec.id == milestone_id:
                return spec
        raise NotFound(f"milestone {milestone_id!r} not found in task {self.id!r}")


@dataclass(frozen=True)
class LeagueSpec:
    id: str
    name: str
    tasks: tuple[TaskSpec, ...]
    task_conditional_levels: tuple[TaskLevel, ...]
    default_royalty: Fraction
    attempt_limit: int
    attempt_duration_s: int

    def task(self, task_id: str) -> TaskSpec:
        for spec in self.tasks:
            if spec.id == task_id:
                return spec
        raise NotFound(f"task {task_id!r} not found in league {self.id!r}")

    def task_factor(self, level_description: str) -> Fraction:
        """Resolve a task conditional level to its T factor.

        Matches the description exactly, falling back to a unique prefix so
        referees can omit trailing parentheticals.
        """
        for level in self.task_conditional_levels:
            if level.description == level_description:
                return level.factor
        prefixed = [
            level for level in self.task_conditional_levels
            if level.description.startswith(level_description)
        ]
        if len(prefixed) == 1:
            return prefixed[0].factor
        reason = "is ambiguous" if prefixed else "not found"
        raise NotFound(
            f"task conditional level {level_description!r} {reason} in league {self.id!r}"
        )


@dataclass(frozen=True)
class Rulebook:
    version: str
    leagues: tuple[LeagueSpec, ...] = field(default=())

    def league(self, league_id: str) -> LeagueSpec:
        for spec in self.leagues:
            if spec.id == league_id:
                return spec
        raise NotFound(f"league {league_id!r} not found")


# --- loading ------------------------------------------------------------------


def _want(node: Any, key: str, kind: type, path: str) -> Any:
    if not isinstance(node, Mapping):
        raise ParseError(f"{path}: expected an object")
    if key not in node:
        raise ParseError(f"{path}.{key}: missing")
    value = node[key]
    if kind is float:  # numeric: int, float, or decimal string
        if not isinstance(value, (int, float, str)) or isinstance(value, bool):
            raise ParseError(f"{path}.{key}: expected a number")
        return value
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise ParseError(f"{path}.{key}: expected {kind.__name__}")
    return value


def _fraction_in_unit(value: Any, path: str) -> Fraction:
    try:
        frac = as_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"{path}: not a rational number ({exc})") from exc
    if not 0 <= frac <= 1:
        raise ValidationError(f"{path}: value {value!r} outside [0, 1]")
    return frac


def _parse_levels(node: Any, path: str) -> list[ConditionalLevel]:
    if not isinstance(node, Sequence) or isinstance(node, (str, bytes)):
        raise ParseError(f"{path}: expected a list")
    levels = []
    for i, entry in enumerate(node):
        entry_path = f"{path}[{i}]"
        description = _want(entry, "description", str, entry_path)
        factor = _fraction_in_unit(_want(entry, "factor", float, entry_path), f"{entry_path}.factor")
        levels.append(ConditionalLevel(description, factor))
    return levels


def _parse_penalties(node: Any, path: str) -> list[PenaltySpec]:
    if not isinstance(node, Sequence) or isinstance(node, (str, bytes)):
        raise ParseError(f"{path}: expected a list")
    penalties = []
    for i, entry in enumerate(node):
        entry_path = f"{path}[{i}]"
        description = _want(entry, "description", str, entry_path)
        points = _want(entry, "points", int, entry_path)
        if points < 0:
            raise ValidationError(f"{entry_path}.points: negative penalty")
        penalties.append(PenaltySpec(description, points))
    return penalties


def _parse_type(value: Any, path: str) -> MilestoneType:
    if not isinstance(value, str):
        raise ParseError(f"{path}: expected a string")
    key = value.strip().lower().replace(" ", "_").replace("/", "_")
    if key in _TYPE_ALIASES:
        return _TYPE_ALIASES[key]
    try:
        return MilestoneType(key)
    except ValueError:
        names = sorted(t.value for t in MilestoneType)
        raise ParseError(f"{path}: unknown milestone type {value!r} (expected one of {names})")


def _unique_descriptions(items: Iterable, path: str) -> None:
    seen: set[str] = set()
    for item in items:
        if item.description in seen:
            raise ValidationError(f"{path}: duplicate description {item.description!r}")
        seen.add(item.description)


def _parse_milestone(
    node: Any,
    path: str,
    level_catalogs: Mapping[MilestoneType, list[ConditionalLevel]],
    penalty_catalogs: Mapping[MilestoneType, list[PenaltySpec]],
) -> MilestoneSpec:
    ms_id = _want(node, "id", str, path)
    number = _want(node, "number", int, path)
    if number < 1:
        raise ValidationError(f"{path}.number: must be a positive integer")
    description = _want(node, "description", str, path)
    ms_type = _parse_type(_want(node, "type", str, path), f"{path}.type")
    base_score = _want(node, "base_score", int, path)
    if base_score < 0:
        raise ValidationError(f"{path}.base_score: negative base score")

    levels = list(_parse_levels(node.get("conditional_levels", []), f"{path}.conditional_levels"))
    levels.extend(level_catalogs.get(ms_type, []))
    if not levels:
        raise ValidationError(f"{path}: milestone has no conditional levels")
    _unique_descriptions(levels, f"{path}.conditional_levels")

    penalties = list(_parse_penalties(node.get("penalties", []), f"{path}.penalties"))
    penalties.extend(penalty_catalogs.get(ms_type, []))
    _unique_descriptions(penalties, f"{path}.penalties")

    exclusive_group = node.get("exclusive_group")
    if exclusive_group is not None and not isinstance(exclusive_group, str):
        raise ParseError(f"{path}.exclusive_group: expected a string or null")

    return MilestoneSpec(
        id=ms_id,
        number=number,
        description=description,
        milestone_type=ms_type,
        base_score=base_score,
        conditional_levels=tuple(levels),
        penalties=tuple(penalties),
        exclusive_group=exclusive_group,
    )


def _parse_league(node: Any, path: str) -> LeagueSpec:
    league_id = _want(node, "id", str, path)
    name = _want(node, "name", str, path)

    level_catalogs: dict[MilestoneType, list[ConditionalLevel]] = {}
    for type_name, entries in (node.get("level_catalogs") or {}).items():
        catalog_path = f"{path}.level_catalogs.{type_name}"
        level_catalogs[_parse_type(type_name, catalog_path)] = _parse_levels(entries, catalog_path)
    penalty_catalogs: dict[MilestoneType, list[PenaltySpec]] = {}
    for type_name, entries in (node.get("penalty_catalogs") or {}).items():
        catalog_path = f"{path}.penalty_catalogs.{type_name}"
        penalty_catalogs[_parse_type(type_name, catalog_path)] = _parse_penalties(entries, catalog_path)

    task_levels = []
    for i, entry in enumerate(_want(node, "task_conditional_levels", list, path)):
        entry_path = f"{path}.task_conditional_levels[{i}]"
        task_levels.append(
            TaskLevel(
                description=_want(entry, "description", str, entry_path),
                factor=_fraction_in_unit(_want(entry, "factor", float, entry_path), f"{entry_path}.factor"),
            )
        )
    if not any(level.factor == 1 for level in task_levels):
        raise ValidationError(f"{path}.task_conditional_levels: no level with T = 1.0")
    _unique_descriptions(task_levels, f"{path}.task_conditional_levels")

    default_royalty = _fraction_in_unit(
        node.get("default_royalty", "0.25"), f"{path}.default_royalty"
    )
    attempt_limit = _want(node, "attempt_limit", int, path)
    if attempt_limit < 1:
        raise ValidationError(f"{path}.attempt_limit: must be >= 1")
    attempt_duration = _want(node, "attempt_duration_s", int, path)
    if attempt_duration <= 0:
        raise ValidationError(f"{path}.attempt_duration_s: must be > 0")

    tasks = []
    task_nodes = _want(node, "tasks", list, path)
    if not task_nodes:
        raise ValidationError(f"{path}.tasks: league has no tasks")
    for i, task_node in enumerate(task_nodes):
        task_path = f"{path}.tasks[{i}]"
        task_id = _want(task_node, "id", str, task_path)
        task_name = _want(task_node, "name", str, task_path)
        milestone_nodes = _want(task_node, "milestones", list, task_path)
        if not milestone_nodes:
            raise ValidationError(f"{task_path}.milestones: task has no milestones")
        milestones = [
            _parse_milestone(ms, f"{task_path}.milestones[{j}]", level_catalogs, penalty_catalogs)
            for j, ms in enumerate(milestone_nodes)
        ]
        seen_ids: set[str] = set()
        for ms in milestones:
            if ms.id in seen_ids:
                raise ValidationError(f"{task_path}: duplicate milestone id {ms.id!r}")
            seen_ids.add(ms.id)
        milestones.sort(key=lambda ms: ms.number)
        tasks.append(TaskSpec(id=task_id, name=task_name, milestones=tuple(milestones)))

    seen_tasks: set[str] = set()
    for task in tasks:
        if task.id in seen_tasks:
            raise ValidationError(f"{path}: duplicate task id {task.id!r}")
        seen_tasks.add(task.id)

    return LeagueSpec(
        id=league_id,
        name=name,
        tasks=tuple(tasks),
        task_conditional_levels=tuple(task_levels),
        default_royalty=default_royalty,
        attempt_limit=attempt_limit,
        attempt_duration_s=attempt_duration,
    )


def load_rulebook(document: Any) -> Rulebook:
    """Validate a JSON-compatible tree into a Rulebook.

    Raises ParseError for malformed structure and ValidationError for
    invariant violations; both name the offending path. Milestones without a
    full-autonomy (l = 1.0) level trigger a RulebookWarning, not an error.
    """
    version = _want(document, "version", str, "$")
    league_nodes = _want(document, "leagues", list, "$")
    if not league_nodes:
        raise ValidationError("$.leagues: no leagues")
    leagues = [_parse_league(node, f"$.leagues[{i}]") for i, node in enumerate(league_nodes)]

    seen: set[str] = set()
    for league in leagues:
        if league.id in seen:
            raise ValidationError(f"$.leagues: duplicate league id {league.id!r}")
        seen.add(league.id)

    rulebook = Rulebook(version=version, leagues=tuple(leagues))
    capped = [
        f"{league.id}/{task.id}/{ms.id}"
        for league in rulebook.leagues
        for task in league.tasks
        for ms in task.milestones
        if not any(level.factor == 1 for level in ms.conditional_levels)
    ]
    if capped:
        warnings.warn(
            "milestones without a full-autonomy (l = 1.0) level: " + ", ".join(capped),
            RulebookWarning,
            stacklevel=2,
        )
    return rulebook


def load_rulebook_file(path: str | Path) -> Rulebook:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read rulebook file {path}: {exc}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return load_rulebook(document)


def merge_rulebooks(rulebooks: Sequence[Rulebook]) -> Rulebook:
    """Combine single-league documents into one rulebook (ids must not clash)."""
    if not rulebooks:
        raise ValidationError("no rulebooks to merge")
    leagues: list[LeagueSpec] = []
    seen: set[str] = set()
    for rulebook in rulebooks:
        for league in rulebook.leagues:
            if league.id in seen:
                raise ValidationError(f"duplicate league id {league.id!r} across rulebooks")
            seen.add(league.id)
            leagues.append(league)
    return Rulebook(version=rulebooks[0].version, leagues=tuple(leagues))


def bundled_rulebook() -> Rulebook:
    """Load the three league documents shipped with the package."""
    rulebooks = []
    for name in BUNDLED_LEAGUE_FILES:
        text = resources.files(__package__).joinpath("rulebooks", name).read_text("utf-8")
        rulebooks.append(load_rulebook(json.loads(text)))
    return merge_rulebooks(rulebooks)


# --- queries ------------------------------------------------------------------


def lookup_milestone(
    rulebook: Rulebook, league_id: str, task_id: str, milestone_id: str
) -> MilestoneSpec:
    return rulebook.league(league_id).task(task_id).milestone(milestone_id)


def task_conditional_factor(rulebook: Rulebook, league_id: str, level_description: str) -> Fraction:
    return rulebook.league(league_id).task_factor(level_description)


# --- serialization --------------------------------------------------------------


def _factor_str(factor: Fraction) -> str:
    return str(factor)


def rulebook_to_document(rulebook: Rulebook) -> dict:
    """Serialize to a JSON-compatible tree that round-trips via load_rulebook.

    Levels and penalties are emitted fully expanded per milestone; factors
    serialize as exact rational strings.
    """
    return {
        "version": rulebook.version,
        "leagues": [
            {
                "id": league.id,
                "name": league.name,
                "default_royalty": _factor_str(league.default_royalty),
                "attempt_limit": league.attempt_limit,
                "attempt_duration_s": league.attempt_duration_s,
                "task_conditional_levels": [
                    {"description": level.description, "factor": _factor_str(level.factor)}
                    for level in league.task_conditional_levels
                ],
                "tasks": [
                    {
                        "id": task.id,
                        "name": task.name,
                        "milestones": [
                            {
                                "id": ms.id,
                                "number": ms.number,
                                "type": ms.milestone_type.value,
                                "description": ms.description,
                                "base_score": ms.base_score,
                                "conditional_levels": [
                                    {"description": lv.description, "factor": _factor_str(lv.factor)}
                                    for lv in ms.conditional_levels
                                ],
                                "penalties": [
                                    {"description": p.description, "points": p.points}
                                    for p in ms.penalties
                                ],
                                **({"exclusive_group": ms.exclusive_group} if ms.exclusive_group else {}),
                            }
                            for ms in task.milestones
                        ],
                    }
                    for task in league.tasks
                ],
            }
            for league in rulebook.leagues
        ],
    }
