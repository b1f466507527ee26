"""Module registry: uploads, windows, the on-site freeze, and declarations.

The marketplace is the stateful half of the transfer mechanic. Teams upload
modules during bounded windows, the registry freezes when the on-site phase
begins (uploads stop, declarations continue), and integration declarations,
once verified by a referee, are what make a milestone count as transferred.

A trust-based mode (``auto_verify``) marks declarations verified on entry,
for events that score on team declarations alone.

Mutations are designed to be applied from a single writer (the event ledger);
reads never mutate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from fractions import Fraction
from typing import Collection

from .clock import format_ts
from .errors import (
    AlreadyFrozen,
    DuplicateId,
    FrozenMarketplace,
    ModuleRemoved,
    NotFound,
    OutsideWindow,
    SelfIntegration,
    Unauthorized,
    UnknownScope,
    ValidationError,
)
from .numeric import as_fraction
from .rulebook import Rulebook
from .scoring import ModuleUse

TECHNICAL_COMMITTEE = "technical_committee"

EVENT_DEFAULT_ROYALTY = Fraction(1, 4)


class ModuleCategory(Enum):
    RIGID_BODY_DYNAMICS_CONTROL = "rigid_body_dynamics_control"
    POSE_ESTIMATION_VISION_DETECTION = "pose_estimation_vision_detection"
    SIMULATION_DIGITAL_ENVIRONMENTS = "simulation_digital_environments"
    LOCALIZATION_MAPPING = "localization_mapping"
    DATASETS_MODELS = "datasets_models"
    SPEECH_COMMUNICATION = "speech_communication"
    OTHER = "other"


class ModuleKind(Enum):
    SOFTWARE = "software"
    DATA = "data"
    HARDWARE = "hardware"


class ModuleStatus(Enum):
    ACTIVE = "active"
    REMOVED = "removed"


@dataclass(frozen=True)
class UploadWindow:
    id: str
    opens_at: datetime
    closes_at: datetime

    def __post_init__(self) -> None:
        if self.opens_at >= self.closes_at:
            raise ValidationError(f"window {self.id!r}: opens_at must precede closes_at")

    def contains(self, instant: datetime) -> bool:
        return self.opens_at <= instant <= self.closes_at


@dataclass(frozen=True)
class ModuleRecord:
    id: str
    name: str
    category: ModuleCategory
    kind: ModuleKind
    developer_team_ids: frozenset[str]
    royalty_rate: Fraction | None = None  # None = event default, applied at upload
    uploaded_at: datetime | None = None
    upload_window_id: str | None = None
    description: str = ""
    artifact_uri: str = ""
    status: ModuleStatus = ModuleStatus.ACTIVE

    def __post_init__(self) -> None:
        developers = frozenset(self.developer_team_ids)
        if not developers:
            raise ValidationError(f"module {self.id!r}: developer_team_ids must be non-empty")
        object.__setattr__(self, "developer_team_ids", developers)
        if self.royalty_rate is not None:
            rate = as_fraction(self.royalty_rate)
            if not 0 <= rate <= 1:
                raise ValidationError(f"module {self.id!r}: royalty rate {rate} outside [0, 1]")
            object.__setattr__(self, "royalty_rate", rate)

    @property
    def co_developer_count(self) -> int:
        return len(self.developer_team_ids)


@dataclass(frozen=True)
class IntegrationDeclaration:
    id: str
    user_team_id: str
    module_id: str
    league_id: str
    task_id: str
    milestone_id: str
    declared_at: datetime
    verified: bool = False


@dataclass(frozen=True)
class Scope:
    league_id: str
    task_id: str
    milestone_id: str


class Marketplace:
    """Single-event module registry; mutations go through the named ops."""

    def __init__(
        self,
        rulebook: Rulebook,
        default_royalty: Fraction = EVENT_DEFAULT_ROYALTY,
        auto_verify: bool = False,
    ) -> None:
        self._rulebook = rulebook
        self._default_royalty = as_fraction(default_royalty)
        self.auto_verify = auto_verify
        self._modules: dict[str, ModuleRecord] = {}
        self._windows: dict[str, UploadWindow] = {}
        self._declarations: dict[str, IntegrationDeclaration] = {}
        self.frozen_at: datetime | None = None

    # --- windows and freeze --------------------------------------------------

    @property
    def frozen(self) -> bool:
        return self.frozen_at is not None

    def add_window(self, window: UploadWindow) -> UploadWindow:
        if window.id in self._windows:
            raise DuplicateId(f"upload window {window.id!r} already exists")
        for other in self._windows.values():
            if window.opens_at < other.closes_at and other.opens_at < window.closes_at:
                raise ValidationError(
                    f"window {window.id!r} overlaps window {other.id!r}"
                )
        self._windows[window.id] = window
        return window

    def windows(self) -> list[UploadWindow]:
        return sorted(self._windows.values(), key=lambda w: w.opens_at)

    def freeze(self, at: datetime) -> datetime:
        if self.frozen_at is not None:
            raise AlreadyFrozen(f"marketplace frozen since {format_ts(self.frozen_at)}")
        self.frozen_at = at
        return at

    # --- uploads ---------------------------------------------------------------

    def upload_module(self, record: ModuleRecord, now: datetime) -> ModuleRecord:
        if self.frozen_at is not None and now >= self.frozen_at:
            raise FrozenMarketplace(
                f"marketplace frozen at {format_ts(self.frozen_at)}; uploads closed"
            )
        if record.id in self._modules:
            raise DuplicateId(f"module id {record.id!r} already taken")
        window = next((w for w in self._windows.values() if w.contains(now)), None)
        if window is None:
            raise OutsideWindow(f"no upload window open at {format_ts(now)}")
        stored = replace(
            record,
            royalty_rate=record.royalty_rate if record.royalty_rate is not None
            else self._default_royalty,
            uploaded_at=now,
            upload_window_id=window.id,
            status=ModuleStatus.ACTIVE,
        )
        self._modules[stored.id] = stored
        return stored

    def module(self, module_id: str) -> ModuleRecord:
        record = self._modules.get(module_id)
        if record is None:
            raise NotFound(f"module {module_id!r} not found")
        return record

    def list_modules(
        self,
        category: ModuleCategory | None = None,
        developer_team_id: str | None = None,
        include_removed: bool = False,
    ) -> list[ModuleRecord]:
        records = [
            record
            for record in self._modules.values()
            if (include_removed or record.status is ModuleStatus.ACTIVE)
            and (category is None or record.category is category)
            and (developer_team_id is None or developer_team_id in record.developer_team_ids)
        ]
        return sorted(records, key=lambda r: r.id)

    def remove_module(self, module_id: str, actor_roles: Collection[str]) -> ModuleRecord:
        if TECHNICAL_COMMITTEE not in actor_roles:
            raise Unauthorized("module removal requires the technical committee role")
        record = self.module(module_id)
        if record.status is ModuleStatus.REMOVED:
            raise ModuleRemoved(f"module {module_id!r} already removed")
        removed = replace(record, status=ModuleStatus.REMOVED)
        self._modules[module_id] = removed
        return removed

    # --- declarations ------------------------------------------------------------

    def declare_integration(self, decl: IntegrationDeclaration) -> IntegrationDeclaration:
        if decl.id in self._declarations:
            raise DuplicateId(f"declaration id {decl.id!r} already taken")
        record = self.module(decl.module_id)
        if record.status is ModuleStatus.REMOVED:
            raise ModuleRemoved(f"module {decl.module_id!r} was removed from the marketplace")
        if decl.user_team_id in record.developer_team_ids:
            raise SelfIntegration(
                f"team {decl.user_team_id!r} co-developed module {decl.module_id!r}"
            )
        try:
            self._rulebook.league(decl.league_id).task(decl.task_id).milestone(decl.milestone_id)
        except NotFound as exc:
            raise UnknownScope(str(exc)) from exc
        stored = replace(decl, verified=decl.verified or self.auto_verify)
        self._declarations[stored.id] = stored
        return stored

    def declaration(self, decl_id: str) -> IntegrationDeclaration:
        decl = self._declarations.get(decl_id)
        if decl is None:
            raise NotFound(f"declaration {decl_id!r} not found")
        return decl

    def verify_declaration(self, decl_id: str) -> IntegrationDeclaration:
        verified = replace(self.declaration(decl_id), verified=True)
        self._declarations[decl_id] = verified
        return verified

    def list_declarations(self, verified_only: bool = False) -> list[IntegrationDeclaration]:
        decls = [
            d for d in self._declarations.values() if d.verified or not verified_only
        ]
        return sorted(decls, key=lambda d: d.id)

    def external_modules_for(self, user_team_id: str, scope: Scope) -> list[ModuleRecord]:
        """Distinct modules behind verified declarations for this team+scope.

        The result's length is M_n. Removed modules stay in (history scores);
        modules the user co-developed stay out, whatever was declared.
        """
        ids = {
            d.module_id
            for d in self._declarations.values()
            if d.verified
            and d.user_team_id == user_team_id
            and (d.league_id, d.task_id, d.milestone_id)
            == (scope.league_id, scope.task_id, scope.milestone_id)
        }
        records = [self._modules[i] for i in sorted(ids)]
        return [r for r in records if user_team_id not in r.developer_team_ids]

    # --- views -----------------------------------------------------------------

    def scoring_view(self) -> dict[str, ModuleUse]:
        """Every uploaded module (removed included) as the scoring engine sees it."""
        return {
            record.id: ModuleUse(
                module_id=record.id,
                royalty_rate=record.royalty_rate,
                developer_team_ids=record.developer_team_ids,
            )
            for record in self._modules.values()
        }

    def uploads_per_window(self) -> dict[str, int]:
        counts = {window_id: 0 for window_id in self._windows}
        for record in self._modules.values():
            if record.upload_window_id is not None:
                counts[record.upload_window_id] = counts.get(record.upload_window_id, 0) + 1
        return counts

    def removed_count(self) -> int:
        return sum(1 for r in self._modules.values() if r.status is ModuleStatus.REMOVED)


# --- serialization ----------------------------------------------------------------


def module_payload(record: ModuleRecord) -> dict:
    return {
        "id": record.id,
        "name": record.name,
        "category": record.category.value,
        "kind": record.kind.value,
        "developer_team_ids": sorted(record.developer_team_ids),
        "royalty_rate": str(record.royalty_rate) if record.royalty_rate is not None else None,
        "uploaded_at": format_ts(record.uploaded_at) if record.uploaded_at else None,
        "upload_window_id": record.upload_window_id,
        "description": record.description,
        "artifact_uri": record.artifact_uri,
        "status": record.status.value,
    }


def declaration_payload(decl: IntegrationDeclaration) -> dict:
    return {
        "id": decl.id,
        "user_team_id": decl.user_team_id,
        "module_id": decl.module_id,
        "league_id": decl.league_id,
        "task_id": decl.task_id,
        "milestone_id": decl.milestone_id,
        "declared_at": format_ts(decl.declared_at),
        "verified": decl.verified,
    }
