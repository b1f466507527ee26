"""Marketplace registry: windows, freeze, declarations, external-module counts."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone
from fractions import Fraction

import pytest

from coopetition.errors import (
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
from coopetition.marketplace import (
    TECHNICAL_COMMITTEE,
    IntegrationDeclaration,
    Marketplace,
    ModuleCategory,
    ModuleKind,
    ModuleRecord,
    ModuleStatus,
    Scope,
    UploadWindow,
)

UTC = timezone.utc
W1 = UploadWindow("w1", datetime(2024, 6, 1, tzinfo=UTC), datetime(2024, 6, 30, tzinfo=UTC))
W2 = UploadWindow("w2", datetime(2024, 8, 1, tzinfo=UTC), datetime(2024, 8, 31, tzinfo=UTC))
W3 = UploadWindow("w3", datetime(2024, 10, 1, tzinfo=UTC), datetime(2024, 10, 31, tzinfo=UTC))
FREEZE_AT = datetime(2024, 11, 18, 9, 0, tzinfo=UTC)
SCOPE = Scope("IRL", "task-board", "MS1")


def draft(module_id="mod-1", developers=("tum",), rate=None, **kw):
    return ModuleRecord(
        id=module_id,
        name=f"Module {module_id}",
        category=kw.pop("category", ModuleCategory.OTHER),
        kind=kw.pop("kind", ModuleKind.SOFTWARE),
        developer_team_ids=frozenset(developers),
        royalty_rate=rate,
        **kw,
    )


def declaration(decl_id="d1", team="inria", module_id="mod-1", scope=SCOPE, **kw):
    return IntegrationDeclaration(
        id=decl_id,
        user_team_id=team,
        module_id=module_id,
        league_id=scope.league_id,
        task_id=scope.task_id,
        milestone_id=scope.milestone_id,
        declared_at=kw.pop("declared_at", datetime(2024, 11, 20, tzinfo=UTC)),
        **kw,
    )


@pytest.fixture
def market(rulebook):
    mp = Marketplace(rulebook)
    for window in (W1, W2, W3):
        mp.add_window(window)
    return mp


class TestUploads:
    def test_upload_inside_window(self, market):
        record = market.upload_module(draft(), W1.opens_at + timedelta(days=2))
        assert record.status is ModuleStatus.ACTIVE
        assert record.upload_window_id == "w1"
        assert record.uploaded_at == W1.opens_at + timedelta(days=2)

    def test_default_royalty_applied(self, market):
        record = market.upload_module(draft(), W1.opens_at)
        assert record.royalty_rate == Fraction(1, 4)

    def test_explicit_royalty_kept(self, market):
        record = market.upload_module(draft(rate=Fraction(1, 10)), W1.opens_at)
        assert record.royalty_rate == Fraction(1, 10)

    def test_outside_window(self, market):
        with pytest.raises(OutsideWindow):
            market.upload_module(draft(), datetime(2024, 7, 15, tzinfo=UTC))

    def test_duplicate_id(self, market):
        market.upload_module(draft(), W1.opens_at)
        with pytest.raises(DuplicateId):
            market.upload_module(draft(), W1.opens_at + timedelta(days=1))

    def test_event_shape_90_modules(self, market):
        for window, count in ((W1, 24), (W2, 32), (W3, 34)):
            for i in range(count):
                market.upload_module(
                    draft(f"{window.id}-mod-{i}"), window.opens_at + timedelta(hours=i)
                )
        assert len(market.list_modules()) == 90
        assert market.uploads_per_window() == {"w1": 24, "w2": 32, "w3": 34}

    def test_empty_developer_set_rejected(self):
        with pytest.raises(ValidationError):
            draft(developers=())

    def test_royalty_range(self):
        with pytest.raises(ValidationError):
            draft(rate=Fraction(3, 2))


class TestFreeze:
    def test_upload_after_freeze(self, market):
        market.freeze(FREEZE_AT)
        # The freeze beats the window even if one were open then.
        market.add_window(
            UploadWindow("w4", FREEZE_AT - timedelta(days=1), FREEZE_AT + timedelta(days=5))
        )
        with pytest.raises(FrozenMarketplace):
            market.upload_module(draft(), FREEZE_AT + timedelta(hours=1))
        with pytest.raises(FrozenMarketplace):
            market.upload_module(draft(), FREEZE_AT)  # boundary included

    def test_upload_before_freeze_instant_ok(self, market):
        market.freeze(FREEZE_AT)
        record = market.upload_module(draft(), W3.closes_at)
        assert record.uploaded_at <= FREEZE_AT

    def test_double_freeze(self, market):
        market.freeze(FREEZE_AT)
        with pytest.raises(AlreadyFrozen):
            market.freeze(FREEZE_AT + timedelta(days=1))

    def test_declarations_survive_freeze(self, market):
        market.upload_module(draft(), W1.opens_at)
        market.freeze(FREEZE_AT)
        decl = market.declare_integration(declaration())
        assert decl.verified is False

    def test_freeze_monotonicity(self, market):
        uploaded = [
            market.upload_module(draft(f"m{i}"), W1.opens_at + timedelta(days=i))
            for i in range(5)
        ]
        market.freeze(FREEZE_AT)
        assert all(record.uploaded_at <= FREEZE_AT for record in uploaded)
        with pytest.raises(FrozenMarketplace):
            market.upload_module(draft("late"), FREEZE_AT + timedelta(days=1))


class TestDeclarations:
    def test_declare_stored_unverified(self, market):
        market.upload_module(draft(developers=("tum",)), W1.opens_at)
        decl = market.declare_integration(declaration(team="inria"))
        assert decl.verified is False
        assert market.declaration("d1") == decl

    def test_self_integration_rejected(self, market):
        market.upload_module(draft(developers=("tum", "hcr")), W1.opens_at)
        with pytest.raises(SelfIntegration):
            market.declare_integration(declaration(team="hcr"))

    def test_removed_module_rejected(self, market):
        market.upload_module(draft(), W1.opens_at)
        market.remove_module("mod-1", {TECHNICAL_COMMITTEE})
        with pytest.raises(ModuleRemoved):
            market.declare_integration(declaration())

    def test_unknown_scope(self, market):
        market.upload_module(draft(), W1.opens_at)
        with pytest.raises(UnknownScope):
            market.declare_integration(declaration(scope=Scope("IRL", "task-board", "MS99")))

    def test_unknown_module(self, market):
        with pytest.raises(NotFound):
            market.declare_integration(declaration(module_id="ghost"))

    def test_duplicate_declaration_id(self, market):
        market.upload_module(draft(), W1.opens_at)
        market.declare_integration(declaration())
        with pytest.raises(DuplicateId):
            market.declare_integration(declaration())

    def test_auto_verify_mode(self, rulebook):
        mp = Marketplace(rulebook, auto_verify=True)
        mp.add_window(W1)
        mp.upload_module(draft(), W1.opens_at)
        assert mp.declare_integration(declaration()).verified is True

    def test_verify_flips_flag(self, market):
        market.upload_module(draft(), W1.opens_at)
        market.declare_integration(declaration())
        assert market.verify_declaration("d1").verified is True
        assert market.declaration("d1").verified is True


class TestExternalModules:
    def test_no_declarations(self, market):
        assert market.external_modules_for("inria", SCOPE) == []

    def test_two_distinct_modules(self, market):
        market.upload_module(draft("mod-1"), W1.opens_at)
        market.upload_module(draft("mod-2"), W1.opens_at)
        market.declare_integration(declaration("d1", module_id="mod-1"))
        market.declare_integration(declaration("d2", module_id="mod-2"))
        market.verify_declaration("d1")
        market.verify_declaration("d2")
        records = market.external_modules_for("inria", SCOPE)
        assert [r.id for r in records] == ["mod-1", "mod-2"]

    def test_duplicate_module_counted_once(self, market):
        market.upload_module(draft(), W1.opens_at)
        market.declare_integration(declaration("d1"))
        market.declare_integration(declaration("d2"))
        market.verify_declaration("d1")
        market.verify_declaration("d2")
        assert len(market.external_modules_for("inria", SCOPE)) == 1

    def test_unverified_not_counted(self, market):
        market.upload_module(draft(), W1.opens_at)
        market.declare_integration(declaration())
        assert market.external_modules_for("inria", SCOPE) == []

    def test_scope_is_per_milestone(self, market):
        market.upload_module(draft(), W1.opens_at)
        market.declare_integration(declaration())
        market.verify_declaration("d1")
        other = Scope("IRL", "task-board", "MS2")
        assert market.external_modules_for("inria", other) == []

    def test_co_developed_excluded_at_query(self, market):
        # Defense in depth: even a declaration smuggled past declare_integration
        # never yields a self-transfer.
        market.upload_module(draft(developers=("inria", "tum")), W1.opens_at)
        market._declarations["dx"] = declaration("dx", team="inria", verified=True)
        assert market.external_modules_for("inria", SCOPE) == []


class TestRemoval:
    def test_committee_removes(self, market):
        market.upload_module(draft(), W1.opens_at)
        record = market.remove_module("mod-1", {TECHNICAL_COMMITTEE, "team"})
        assert record.status is ModuleStatus.REMOVED
        assert market.list_modules() == []
        assert market.list_modules(include_removed=True)[0].status is ModuleStatus.REMOVED

    def test_team_cannot_remove(self, market):
        market.upload_module(draft(), W1.opens_at)
        with pytest.raises(Unauthorized):
            market.remove_module("mod-1", {"team", "referee"})

    def test_remove_twice(self, market):
        market.upload_module(draft(), W1.opens_at)
        market.remove_module("mod-1", {TECHNICAL_COMMITTEE})
        with pytest.raises(ModuleRemoved):
            market.remove_module("mod-1", {TECHNICAL_COMMITTEE})

    def test_history_still_scores(self, market):
        market.upload_module(draft(), W1.opens_at)
        market.declare_integration(declaration())
        market.verify_declaration("d1")
        before = market.external_modules_for("inria", SCOPE)
        view_before = market.scoring_view()
        market.remove_module("mod-1", {TECHNICAL_COMMITTEE})
        after = market.external_modules_for("inria", SCOPE)
        assert [r.id for r in before] == [r.id for r in after] == ["mod-1"]
        assert market.scoring_view() == view_before


class TestViewsAndFilters:
    def test_scoring_view_shape(self, market):
        market.upload_module(draft(developers=("tum", "hcr"), rate=Fraction(1, 5)), W1.opens_at)
        view = market.scoring_view()
        use = view["mod-1"]
        assert use.royalty_rate == Fraction(1, 5)
        assert use.developer_team_ids == frozenset({"tum", "hcr"})

    def test_category_and_developer_filters(self, market):
        market.upload_module(
            draft("a", developers=("tum",), category=ModuleCategory.LOCALIZATION_MAPPING),
            W1.opens_at,
        )
        market.upload_module(
            draft("b", developers=("hcr",), category=ModuleCategory.SPEECH_COMMUNICATION),
            W1.opens_at,
        )
        assert [r.id for r in market.list_modules(category=ModuleCategory.LOCALIZATION_MAPPING)] == ["a"]
        assert [r.id for r in market.list_modules(developer_team_id="hcr")] == ["b"]

    def test_window_overlap_rejected(self, market):
        with pytest.raises(ValidationError):
            market.add_window(
                UploadWindow("w9", W1.opens_at + timedelta(days=5), W2.opens_at)
            )

    def test_enum_serialization_is_snake_case(self):
        assert ModuleCategory.RIGID_BODY_DYNAMICS_CONTROL.value == "rigid_body_dynamics_control"
        assert ModuleKind.HARDWARE.value == "hardware"
        assert ModuleStatus.REMOVED.value == "removed"
