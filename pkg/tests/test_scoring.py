"""Scoring engine: milestone/task/royalty arithmetic against hand oracles.

Oracle values were computed independently (by hand, from the published
formulas) before the implementation and are frozen here as literals.
"""

from __future__ import annotations

from datetime import datetime, timezone
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopetition.errors import (
    CatalogMismatch,
    EmptyAttempts,
    MutualExclusionViolation,
    SelfRoyalty,
    ValidationError,
)
from coopetition.rulebook import (
    ConditionalLevel,
    LeagueSpec,
    MilestoneSpec,
    MilestoneType,
    PenaltySpec,
    TaskLevel,
    TaskSpec,
)
from coopetition.scoring import (
    AttemptRecord,
    MilestoneResult,
    ModuleUse,
    attempt_breakdown,
    best_attempt,
    breakdown_payload,
    challenge_score,
    coopetition_score,
    milestone_score,
    royalties_total,
    royalty_for_developer,
    subjective_factor,
    task_score,
)

AUTO = "autonomous"
ASSIST = "assisted"
BUMP = "bump"


def make_spec(ms_id="MS1", number=1, base=100, levels=None, penalties=None, group=None):
    levels = levels if levels is not None else {AUTO: 1, ASSIST: Fraction(3, 10)}
    penalties = penalties if penalties is not None else {BUMP: 100}
    return MilestoneSpec(
        id=ms_id,
        number=number,
        description=f"synthetic {ms_id}",
        milestone_type=MilestoneType.OTHER,
        base_score=base,
        conditional_levels=tuple(
            ConditionalLevel(name, Fraction(f)) for name, f in levels.items()
        ),
        penalties=tuple(PenaltySpec(name, p) for name, p in penalties.items()),
        exclusive_group=group,
    )


def make_league(specs, levels=None):
    levels = levels or {"full": 1, "reduced": Fraction(3, 5)}
    task = TaskSpec(id="t1", name="Task", milestones=tuple(specs))
    return LeagueSpec(
        id="L1",
        name="League",
        tasks=(task,),
        task_conditional_levels=tuple(TaskLevel(n, Fraction(f)) for n, f in levels.items()),
        default_royalty=Fraction(1, 4),
        attempt_limit=3,
        attempt_duration_s=600,
    ), task


def result(ms_id="MS1", success=True, level=AUTO, q=0, penalties=(), modules=()):
    return MilestoneResult(
        milestone_id=ms_id,
        success=success,
        level=level,
        subjective_score=q,
        penalties_incurred=tuple(penalties),
        external_module_ids=frozenset(modules),
    )


def attempt(results, team="user", task_level="full", number=1, closed=None):
    return AttemptRecord(
        team_id=team,
        league_id="L1",
        task_id="t1",
        attempt_number=number,
        task_level=task_level,
        results=tuple(results),
        closed_at=closed,
    )


class TestMilestoneScore:
    def test_identity_multipliers(self):
        spec = make_spec(base=400)
        assert milestone_score(spec, result()) == 400

    def test_transfer_oracle_3800(self):
        # 10 * (400 * 1.2 - 100) = 3800
        spec = make_spec(base=400)
        res = result(q=10, penalties=[BUMP], modules=["m1"])
        assert milestone_score(spec, res) == 3800

    def test_negative_before_clamp(self):
        # 0.3 * (100 * 1.1 - 200) = -27
        spec = make_spec(base=100, penalties={BUMP: 200})
        res = result(level=ASSIST, q=5, penalties=[BUMP])
        assert milestone_score(spec, res) == -27

    def test_failure_scores_zero(self):
        spec = make_spec(base=400)
        assert milestone_score(spec, result(success=False, q=10)) == 0

    def test_penalty_multiplicity(self):
        spec = make_spec(base=400)
        assert milestone_score(spec, result(penalties=[BUMP, BUMP])) == 200

    def test_unknown_level(self):
        with pytest.raises(CatalogMismatch):
            milestone_score(make_spec(), result(level="nope"))

    def test_unknown_penalty(self):
        with pytest.raises(CatalogMismatch):
            milestone_score(make_spec(), result(penalties=["nope"]))

    def test_wrong_milestone(self):
        with pytest.raises(CatalogMismatch):
            milestone_score(make_spec(ms_id="MS2"), result(ms_id="MS1"))

    def test_q_out_of_range(self):
        with pytest.raises(ValidationError):
            result(q=11)
        with pytest.raises(ValidationError):
            result(q=-1)

    def test_q_granularity(self):
        result(q=Fraction(73, 10))  # 7.3 is fine
        with pytest.raises(ValidationError):
            result(q=Fraction(731, 100))  # 7.31 is not


@settings(max_examples=300, deadline=None)
@given(
    base=st.integers(0, 5000),
    level_tenths=st.integers(0, 10),
    q_tenths=st.integers(0, 100),
    penalty=st.integers(0, 2000),
)
def test_transfer_is_exactly_tenfold(base, level_tenths, q_tenths, penalty):
    spec = make_spec(
        base=base,
        levels={AUTO: Fraction(level_tenths, 10)},
        penalties={BUMP: penalty},
    )
    plain = milestone_score(spec, result(q=Fraction(q_tenths, 10), penalties=[BUMP]))
    boosted = milestone_score(
        spec, result(q=Fraction(q_tenths, 10), penalties=[BUMP], modules=["m"])
    )
    assert boosted == 10 * plain


@settings(max_examples=300, deadline=None)
@given(q_tenths=st.integers(0, 100))
def test_subjective_factor_bounds(q_tenths):
    factor = subjective_factor(Fraction(q_tenths, 10))
    assert 1 <= factor <= Fraction(6, 5)


@settings(max_examples=200, deadline=None)
@given(
    q_lo=st.integers(0, 100),
    q_hi=st.integers(0, 100),
    p_lo=st.integers(0, 5),
    p_hi=st.integers(0, 5),
)
def test_monotone_in_q_and_p(q_lo, q_hi, p_lo, p_hi):
    q_lo, q_hi = sorted((q_lo, q_hi))
    p_lo, p_hi = sorted((p_lo, p_hi))
    spec = make_spec(base=500)
    score_q = lambda t: milestone_score(spec, result(q=Fraction(t, 10)))
    score_p = lambda n: milestone_score(spec, result(penalties=[BUMP] * n))
    assert score_q(q_lo) <= score_q(q_hi)
    assert score_p(p_lo) >= score_p(p_hi)


class TestTaskScore:
    def test_single_milestone_no_transfer(self):
        league, task = make_league([make_spec(base=400)])
        points, retention = task_score(league, task, attempt([result()]), {})
        assert points == 400
        assert retention == {"MS1": 1}

    def test_oracle_2160(self):
        # Milestone A: MS = 10 * (400 * 1.2) = 4800 with one r=0.25 module,
        # contribution 0.6 * 0.75 * 4800 = 2160. Milestone B clamps at 0.
        league, task = make_league(
            [
                make_spec("MS1", 1, base=400),
                make_spec("MS2", 2, base=100, penalties={BUMP: 200}),
            ]
        )
        modules = {"m1": ModuleUse("m1", Fraction(1, 4), frozenset({"dev"}))}
        run = attempt(
            [
                result("MS1", q=10, modules=["m1"]),
                result("MS2", level=ASSIST, q=5, penalties=[BUMP]),
            ],
            task_level="reduced",
        )
        points, retention = task_score(league, task, run, modules)
        assert points == 2160
        assert retention == {"MS1": Fraction(3, 4), "MS2": 1}

    def test_two_modules_normalized(self):
        # retention 1 - (0.25 + 0.25)/2 = 0.75; contribution 750 on MS=1000.
        league, task = make_league([make_spec(base=100)])
        modules = {
            "m1": ModuleUse("m1", Fraction(1, 4), frozenset({"dev1"})),
            "m2": ModuleUse("m2", Fraction(1, 4), frozenset({"dev2"})),
        }
        run = attempt([result(modules=["m1", "m2"])])
        points, retention = task_score(league, task, run, modules)
        assert retention["MS1"] == Fraction(3, 4)
        assert points == 750

    def test_task_points_never_negative(self):
        league, task = make_league([make_spec(base=100, penalties={BUMP: 500})])
        points, _ = task_score(league, task, attempt([result(penalties=[BUMP])]), {})
        assert points == 0

    def test_mutual_exclusion_enforced(self):
        league, task = make_league(
            [
                make_spec("MS1", 1, group="alt"),
                make_spec("MS2", 2, group="alt"),
            ]
        )
        run = attempt([result("MS1"), result("MS2")])
        with pytest.raises(MutualExclusionViolation):
            task_score(league, task, run, {})
        # One success plus one failure in the group is fine.
        ok = attempt([result("MS1"), result("MS2", success=False)])
        task_score(league, task, ok, {})

    def test_duplicate_result_rejected(self):
        league, task = make_league([make_spec()])
        with pytest.raises(ValidationError, match="duplicate"):
            task_score(league, task, attempt([result(), result()]), {})

    def test_missing_module_in_view(self):
        league, task = make_league([make_spec()])
        with pytest.raises(CatalogMismatch, match="ghost"):
            task_score(league, task, attempt([result(modules=["ghost"])]), {})

    def test_own_module_does_not_transfer(self):
        # A module co-developed by the user neither boosts nor deducts.
        league, task = make_league([make_spec(base=400)])
        modules = {"m1": ModuleUse("m1", Fraction(1, 4), frozenset({"user", "dev"}))}
        run = attempt([result(modules=["m1"])])
        points, retention = task_score(league, task, run, modules)
        assert points == 400
        assert retention == {"MS1": 1}
        breakdown = attempt_breakdown(league, task, run, modules)
        assert breakdown.royalties == ()
        assert breakdown.milestones[0].transfer is False


class TestRoyalties:
    def make_fixture(self, developers=("dev",), q=10):
        league, task = make_league([make_spec(base=400)])
        modules = {"m1": ModuleUse("m1", Fraction(1, 4), frozenset(developers))}
        run = attempt([result(q=q, modules=["m1"])])
        return league, task, run, modules

    def test_single_developer_oracle_1200(self):
        # MS = 4800, one module, one developer: 0.25 * 4800 = 1200.
        _, task, run, modules = self.make_fixture()
        entries = royalty_for_developer("dev", task, run, modules)
        assert [e.amount for e in entries] == [1200]
        entry = entries[0]
        assert (entry.user_team_id, entry.module_id, entry.milestone_id) == ("user", "m1", "MS1")

    def test_co_developers_split_evenly(self):
        _, task, run, modules = self.make_fixture(developers=("dev1", "dev2"))
        for dev in ("dev1", "dev2"):
            entries = royalty_for_developer(dev, task, run, modules)
            assert [e.amount for e in entries] == [600]

    def test_self_royalty_rejected(self):
        _, task, run, modules = self.make_fixture()
        with pytest.raises(SelfRoyalty):
            royalty_for_developer("user", task, run, modules)

    def test_negative_milestone_pays_nothing(self):
        league, task = make_league([make_spec(base=100, penalties={BUMP: 5000})])
        modules = {"m1": ModuleUse("m1", Fraction(1, 4), frozenset({"dev"}))}
        run = attempt([result(penalties=[BUMP], modules=["m1"])])
        assert royalty_for_developer("dev", task, run, modules) == []

    def test_breakdown_matches_per_developer_query(self):
        league, task, run, modules = self.make_fixture(developers=("dev1", "dev2"))
        breakdown = attempt_breakdown(league, task, run, modules)
        by_query = royalty_for_developer("dev1", task, run, modules) + royalty_for_developer(
            "dev2", task, run, modules
        )
        assert sorted(breakdown.royalties, key=lambda e: e.developer_team_id) == sorted(
            by_query, key=lambda e: e.developer_team_id
        )

    def test_totals(self):
        _, task, run, modules = self.make_fixture(developers=("dev1", "dev2"))
        entries = royalty_for_developer("dev1", task, run, modules)
        assert royalties_total(entries) == 600
        assert royalties_total([]) == 0

    def test_coopetition_score(self):
        assert coopetition_score(Fraction(3510), Fraction(1800)) == 5310
        assert coopetition_score(Fraction(0), Fraction(0)) == 0


@settings(max_examples=300, deadline=None)
@given(
    base=st.integers(0, 3000),
    q_tenths=st.integers(0, 100),
    rates=st.lists(st.fractions(0, 1, max_denominator=20), min_size=1, max_size=4),
    dev_counts=st.data(),
    t_num=st.integers(1, 10),
)
def test_conservation(base, q_tenths, rates, dev_counts, t_num):
    """User deduction equals T times the summed developer payouts."""
    task_factor = Fraction(t_num, 10)
    league, task = make_league(
        [make_spec(base=base)], levels={"full": 1, "chosen": task_factor}
    )
    modules = {}
    for i, rate in enumerate(rates):
        n_devs = dev_counts.draw(st.integers(1, 3))
        devs = frozenset(f"dev{i}_{j}" for j in range(n_devs))
        modules[f"m{i}"] = ModuleUse(f"m{i}", rate, devs)
    run = attempt([result(q=Fraction(q_tenths, 10), modules=list(modules))], task_level="chosen")
    breakdown = attempt_breakdown(league, task, run, modules)

    line = breakdown.milestones[0]
    clamped = max(Fraction(0), line.points)
    deduction = task_factor * clamped * (1 - line.retention)
    payouts = royalties_total(breakdown.royalties)
    assert deduction == task_factor * payouts
    if task_factor == 1:
        assert deduction == payouts


class TestBestAttempt:
    def make(self, scores, penalties=None, closes=None):
        league, task = make_league([make_spec(base=1000)])
        penalties = penalties or [0] * len(scores)
        closes = closes or [None] * len(scores)
        attempts = [
            attempt(
                [result(penalties=[BUMP] * p)],
                number=i + 1,
                closed=c,
            )
            for i, (p, c) in enumerate(zip(penalties, closes))
        ]
        return task, attempts, [Fraction(s) for s in scores]

    def test_max_wins(self):
        task, attempts, scores = self.make([500, 700, 650])
        assert best_attempt(task, attempts, scores) is attempts[1]

    def test_tie_broken_by_penalties(self):
        task, attempts, scores = self.make([700, 700], penalties=[2, 0])
        assert best_attempt(task, attempts, scores) is attempts[1]

    def test_tie_broken_by_close_time(self):
        early = datetime(2024, 11, 20, 10, 0, tzinfo=timezone.utc)
        late = datetime(2024, 11, 20, 12, 0, tzinfo=timezone.utc)
        task, attempts, scores = self.make([700, 700], closes=[late, early])
        assert best_attempt(task, attempts, scores) is attempts[1]

    def test_single_attempt(self):
        task, attempts, scores = self.make([42])
        assert best_attempt(task, attempts, scores) is attempts[0]

    def test_empty_rejected(self):
        task, _, _ = self.make([1])
        with pytest.raises(EmptyAttempts):
            best_attempt(task, [], [])

    def test_argmax_stable_under_base_scaling(self):
        runs = [
            attempt([result(q=3)], number=1),
            attempt([result(q=9, penalties=[BUMP])], number=2),
            attempt([result(q=5)], number=3),
        ]
        for scale in (1, 2, 7, 100):
            # Penalties scale with base so the whole score scales linearly.
            league, task = make_league(
                [make_spec(base=400 * scale, penalties={BUMP: 100 * scale})]
            )
            scores = [task_score(league, task, r, {})[0] for r in runs]
            pick = best_attempt(task, runs, scores)
            assert pick.attempt_number == 3


class TestAggregation:
    def test_challenge_sum(self):
        assert challenge_score([Fraction(2310), Fraction(0), Fraction(1200)]) == 3510

    def test_challenge_empty(self):
        assert challenge_score([]) == 0

    def test_challenge_singleton(self):
        assert challenge_score([Fraction(17, 2)]) == Fraction(17, 2)

    def test_royalties_grouping_irrelevant(self):
        league, task = make_league([make_spec(base=400)])
        modules = {"m1": ModuleUse("m1", Fraction(1, 4), frozenset({"dev"}))}
        run = attempt([result(q=10, modules=["m1"])])
        entries = royalty_for_developer("dev", task, run, modules)
        assert royalties_total(entries + entries) == 2 * royalties_total(entries)


class TestDeterminismAndSerialization:
    def test_identical_inputs_identical_breakdowns(self):
        league, task = make_league([make_spec(base=400)])
        modules = {"m1": ModuleUse("m1", Fraction(1, 4), frozenset({"dev"}))}
        run = attempt([result(q=7, modules=["m1"])])
        a = attempt_breakdown(league, task, run, modules)
        b = attempt_breakdown(league, task, run, modules)
        assert a == b

    def test_payload_shape(self):
        league, task = make_league([make_spec(base=400)])
        modules = {"m1": ModuleUse("m1", Fraction(1, 4), frozenset({"dev"}))}
        run = attempt([result(q=10, modules=["m1"])])
        breakdown = attempt_breakdown(league, task, run, modules).with_totals(
            Fraction(3600), Fraction(0)
        )
        payload = breakdown_payload(breakdown)
        assert payload["task_points"] == {
            "decimal": "3600.00",
            "numerator": 3600,
            "denominator": 1,
        }
        assert payload["milestones"][0]["retention"]["decimal"] == "0.75"
        assert payload["royalties"][0]["amount"]["decimal"] == "1200.00"
        assert payload["coopetition_points"]["decimal"] == "3600.00"

    def test_payload_rounds_half_up(self):
        league, task = make_league(
            [make_spec(base=1, levels={AUTO: Fraction(1, 2)}, penalties={})]
        )
        run = attempt([result()])
        breakdown = attempt_breakdown(league, task, run, {})
        # 0.5 exactly: half-up gives "0.50"; a thirds case rounds at 2 places.
        assert breakdown_payload(breakdown)["task_points"]["decimal"] == "0.50"
