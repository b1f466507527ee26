"""Deterministic demo dataset shaped like a real autumn event.

Fifteen teams across the three leagues, ninety modules uploaded over
three windows (24, 32, 34), integration declarations that form two
separate transfer-graph components before the freeze (the manufacturing
league keeps to itself) and a single one after, plus enough scored
attempts to light up every leaderboard and royalty feed.

Everything is pinned to fixed timestamps, so regenerating the dataset
gives a byte-identical ledger.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError
from .marketplace import (
    IntegrationDeclaration,
    ModuleCategory,
    ModuleKind,
    ModuleRecord,
    UploadWindow,
)
from .rulebook import Rulebook, bundled_rulebook
from .runtime import CompetitionEvent, EventLedger, Role, Team

UTC = timezone.utc

REGISTRATION_DAY = datetime(2024, 5, 15, 9, 0, tzinfo=UTC)
FREEZE_AT = datetime(2024, 11, 18, 9, 0, tzinfo=UTC)
EVENT_DAY = datetime(2024, 11, 19, 9, 0, tzinfo=UTC)

WINDOWS = (
    UploadWindow("w1", datetime(2024, 6, 1, tzinfo=UTC), datetime(2024, 6, 30, 23, tzinfo=UTC)),
    UploadWindow("w2", datetime(2024, 8, 1, tzinfo=UTC), datetime(2024, 8, 31, 23, tzinfo=UTC)),
    UploadWindow("w3", datetime(2024, 10, 1, tzinfo=UTC), datetime(2024, 10, 31, 23, tzinfo=UTC)),
)
UPLOADS_PER_WINDOW = (24, 32, 34)

TEAM_ROWS = (
    ("tum-mirmi", "TUM MIRMI", "Technical University of Munich", "IRL"),
    ("hcr-jsi", "HCR Team", "Jozef Stefan Institute", "IRL"),
    ("tecnalia", "Tecnalia Flexbotics", "Tecnalia", "IRL"),
    ("fraunhofer-ipa", "Fraunhofer IPA", "Fraunhofer IPA", "IRL"),
    ("oscar-cea", "OSCAR", "CEA", "IRL"),
    ("alter-ego", "Alter-Ego", "University of Pisa", "SRL"),
    ("inria", "INRIA Nancy", "INRIA", "SRL"),
    ("susr", "SUSR Team", "Sorbonne University", "SRL"),
    ("dlr", "DLR", "German Aerospace Center", "SRL"),
    ("kit-h2t", "KIT H2T", "Karlsruhe Institute of Technology", "SRL"),
    ("socrob", "SocRob@Home", "IST Lisbon", "SRL"),
    ("gepetto", "GEPETTO", "LAAS-CNRS", "SRL"),
    ("use-grvc", "USE GRVC", "University of Seville", "ORL"),
    ("rsl-eth", "RSL", "ETH Zurich", "ORL"),
    ("iit-ami", "IIT", "Italian Institute of Technology", "ORL"),
)

OFFICIAL_ROWS = (
    ("committee", "Technical Committee", "IRL", Role.TECHNICAL_COMMITTEE),
    ("referee-irl", "Referee IRL", "IRL", Role.REFEREE),
    ("referee-srl", "Referee SRL", "SRL", Role.REFEREE),
    ("referee-orl", "Referee ORL", "ORL", Role.REFEREE),
    ("evaluator-1", "External Evaluator", "SRL", Role.EXTERNAL_EVALUATOR),
)

_REFEREES = {"IRL": "referee-irl", "SRL": "referee-srl", "ORL": "referee-orl"}

# Modules with a part in the event story; all ship in the first window.
STORY_MODULES = (
    ("mod-001", "Task Board Perception Package", ModuleCategory.POSE_ESTIMATION_VISION_DETECTION, ("tum-mirmi",)),
    ("mod-002", "Impedance Grasp Controller", ModuleCategory.RIGID_BODY_DYNAMICS_CONTROL, ("dlr",)),
    ("mod-003", "Multilingual Speech-To-Text", ModuleCategory.SPEECH_COMMUNICATION, ("inria",)),
    ("mod-004", "Whole-Body Motion Planner", ModuleCategory.RIGID_BODY_DYNAMICS_CONTROL, ("kit-h2t",)),
    ("mod-005", "Alpine Elevation Mapper", ModuleCategory.LOCALIZATION_MAPPING, ("rsl-eth",)),
    ("mod-006", "Force-Torque Insertion Skill", ModuleCategory.OTHER, ("tecnalia",)),
    ("mod-007", "Door Opening Skill", ModuleCategory.OTHER, ("fraunhofer-ipa",)),
    ("mod-008", "LLM Task Planner", ModuleCategory.SPEECH_COMMUNICATION, ("socrob",)),
    ("mod-009", "Collision-Aware Motion Library", ModuleCategory.OTHER, ("oscar-cea",)),
    ("mod-010", "Parcel Detection Dataset", ModuleCategory.DATASETS_MODELS, ("iit-ami",)),
)

# Inventory filler: cycled capability names, round-robin developers.
FILLER_CAPABILITIES = (
    ("Pinocchio Dynamics Bindings", ModuleCategory.RIGID_BODY_DYNAMICS_CONTROL),
    ("Cartesian Impedance Stack", ModuleCategory.RIGID_BODY_DYNAMICS_CONTROL),
    ("HappyPose Estimator", ModuleCategory.POSE_ESTIMATION_VISION_DETECTION),
    ("YOLO ROS Detector", ModuleCategory.POSE_ESTIMATION_VISION_DETECTION),
    ("3D Object Tracker", ModuleCategory.POSE_ESTIMATION_VISION_DETECTION),
    ("BlenderProc Scene Generator", ModuleCategory.SIMULATION_DIGITAL_ENVIRONMENTS),
    ("Kitchen Digital Twin", ModuleCategory.SIMULATION_DIGITAL_ENVIRONMENTS),
    ("Task Board Simulation Env", ModuleCategory.SIMULATION_DIGITAL_ENVIRONMENTS),
    ("ICP Laser Localization", ModuleCategory.LOCALIZATION_MAPPING),
    ("ArUco Landmark Mapper", ModuleCategory.LOCALIZATION_MAPPING),
    ("YCB Grasp Annotations", ModuleCategory.DATASETS_MODELS),
    ("Household Objects Model Zoo", ModuleCategory.DATASETS_MODELS),
    ("Text-To-Speech Node", ModuleCategory.SPEECH_COMMUNICATION),
    ("Dialogue State Tracker", ModuleCategory.SPEECH_COMMUNICATION),
    ("Cable Routing Skill", ModuleCategory.OTHER),
    ("Drawer Opening Skill", ModuleCategory.OTHER),
    ("Handover Motion Skill", ModuleCategory.OTHER),
    ("Probe Insertion Skill", ModuleCategory.OTHER),
)

_ROMAN = ("", " II", " III", " IV", " V", " VI")

IRL_AUTO = "The robot manipulator is fully autonomous and the task board is left unchanged"
IRL_TELEOP_LOS = "The robot is teleoperated within the operator's line of sight"
IRL_COLLIDE = "The robot collides with the task board, table or any other object present in the environment"
IRL_T_FULL = "Task board randomly positioned within the table"
IRL_T_FIXED = "Task board fixed within the table"
NAV_AUTO = "The robot is fully autonomous. No teleoperation or artificial landmarks"
SPEECH = "The robot understands the command via speech"
HANDLE = "A standard unmodified handle is used for object manipulation"
TASK_T_FULL = "Task variables randomly generated (Li, Lj, Oi)"

# (id, user, module, league, task, milestone, declared offset in days
# relative to the freeze; negative = pre-event)
DECLARATIONS = (
    ("decl-0001", "hcr-jsi", "mod-001", "IRL", "task-board", "MS1", -13),
    ("decl-0002", "tecnalia", "mod-001", "IRL", "task-board", "MS4", -12),
    ("decl-0003", "fraunhofer-ipa", "mod-006", "IRL", "task-board", "MS7", -11),
    ("decl-0004", "oscar-cea", "mod-007", "IRL", "task-board", "MS6", -10),
    ("decl-0005", "hcr-jsi", "mod-009", "IRL", "task-board", "MS6", -9),
    ("decl-0006", "inria", "mod-002", "SRL", "multi-functional", "MS7", -8),
    ("decl-0007", "susr", "mod-003", "SRL", "multi-functional", "MS2", -7),
    ("decl-0008", "socrob", "mod-003", "SRL", "multi-functional", "MS2", -6),
    ("decl-0009", "gepetto", "mod-008", "SRL", "multi-functional", "MS2", -5),
    ("decl-0010", "alter-ego", "mod-004", "SRL", "multi-functional", "MS9", -4),
    ("decl-0011", "rsl-eth", "mod-003", "ORL", "delivery", "MS2", -3),
    ("decl-0012", "rsl-eth", "mod-010", "ORL", "delivery", "MS5", -2),
    ("decl-0013", "use-grvc", "mod-005", "ORL", "delivery", "MS1", -2),
    ("decl-0014", "iit-ami", "mod-004", "ORL", "delivery", "MS8", -1),
    # On-site declarations bridge the manufacturing league to the rest.
    ("decl-0015", "inria", "mod-001", "SRL", "multi-functional", "MS6", 1),
    ("decl-0016", "tecnalia", "mod-002", "IRL", "task-board", "MS7", 1),
)

_PERFECT_IRL = tuple(
    (f"MS{n}", True, IRL_AUTO, 5, ()) for n in range(1, 11)
)

# (team, task, task level, hour offset into the event, outcomes, subjective
# overrides applied by the external evaluator before closing)
ATTEMPTS = (
    ("tum-mirmi", "task-board", IRL_T_FULL, 0, _PERFECT_IRL, ()),
    (
        "hcr-jsi", "task-board", IRL_T_FULL, 1,
        (
            ("MS1", True, IRL_AUTO, 5, ()),
            ("MS3", True, IRL_AUTO, 5, ()),
            ("MS7", True, IRL_AUTO, 5, (IRL_COLLIDE,)),
        ),
        (),
    ),
    (
        "tecnalia", "task-board", IRL_T_FIXED, 2,
        (("MS1", True, IRL_TELEOP_LOS, 0, ()),),
        (),
    ),
    (
        "tecnalia", "task-board", IRL_T_FULL, 3,
        (
            ("MS1", True, IRL_AUTO, 7, ()),
            ("MS2", True, IRL_AUTO, 7, ()),
        ),
        (),
    ),
    (
        "inria", "multi-functional", TASK_T_FULL, 4,
        (
            ("MS1", True, NAV_AUTO, 8, ()),
            ("MS2", True, SPEECH, 8, ()),
            ("MS7", True, HANDLE, 0, ()),
        ),
        (("MS7", 10),),
    ),
    (
        "dlr", "multi-functional", TASK_T_FULL, 5,
        (
            ("MS1", True, NAV_AUTO, 5, ()),
            ("MS2", True, SPEECH, 5, ()),
            ("MS3", True, NAV_AUTO, 5, ()),
        ),
        (),
    ),
    (
        "rsl-eth", "delivery", TASK_T_FULL, 6,
        (
            ("MS1", True, NAV_AUTO, 6, ()),
            ("MS2", True, SPEECH, 6, ()),
        ),
        (),
    ),
    (
        "use-grvc", "delivery", TASK_T_FULL, 7,
        (("MS1", True, NAV_AUTO, 5, ()),),
        (),
    ),
)

LEDGER_FILENAME = "ledger.ndjson"
TOKENS_FILENAME = "tokens.json"


@dataclass(frozen=True)
class DemoSummary:
    teams: int
    modules: int
    declarations: int
    attempts: int
    ledger_path: Path | None = None
    tokens_path: Path | None = None


def demo_tokens() -> dict[str, str]:
    """Static demo credentials (token -> principal). Not for production."""
    tokens = {"demo-admin": "system"}
    for team_id, _, _, _ in TEAM_ROWS:
        tokens[f"demo-team-{team_id}"] = team_id
    for official_id, _, _, _ in OFFICIAL_ROWS:
        tokens[f"demo-{official_id}"] = official_id
    return tokens


def _module_catalog() -> list[tuple[ModuleRecord, datetime]]:
    """The ninety uploads, each with its upload instant."""
    catalog: list[tuple[ModuleRecord, datetime]] = []
    team_ids = [row[0] for row in TEAM_ROWS]
    by_league: dict[str, list[str]] = {}
    for team_id, _, _, league in TEAM_ROWS:
        by_league.setdefault(league, []).append(team_id)
    league_of = {row[0]: row[3] for row in TEAM_ROWS}

    story = iter(STORY_MODULES)
    serial = 0
    filler_round: dict[str, int] = {}
    for window, quota in zip(WINDOWS, UPLOADS_PER_WINDOW):
        for slot in range(quota):
            uploaded_at = window.opens_at + timedelta(days=slot % 25, hours=slot % 7)
            if window.id == "w1" and slot < len(STORY_MODULES):
                module_id, name, category, developers = next(story)
            else:
                serial += 1
                module_id = f"mod-{len(catalog) + 1:03d}"
                base, category = FILLER_CAPABILITIES[serial % len(FILLER_CAPABILITIES)]
                name = base + _ROMAN[filler_round.get(base, 0)]
                filler_round[base] = filler_round.get(base, 0) + 1
                lead = team_ids[serial % len(team_ids)]
                developers = (lead,)
                if serial % 9 == 0:
                    siblings = by_league[league_of[lead]]
                    partner = siblings[(siblings.index(lead) + 1) % len(siblings)]
                    developers = (lead, partner)
            catalog.append(
                (
                    ModuleRecord(
                        id=module_id,
                        name=name,
                        category=category,
                        kind=ModuleKind.SOFTWARE,
                        developer_team_ids=frozenset(developers),
                        description=f"{name} shared by {', '.join(developers)}",
                    ),
                    uploaded_at,
                )
            )
    return catalog


def build_demo_event(
    rulebook: Rulebook | None = None, ledger: EventLedger | None = None
) -> CompetitionEvent:
    """Replay the whole demo story into a fresh event."""
    from .scoring import MilestoneResult

    rulebook = rulebook or bundled_rulebook()
    # An empty ledger is falsy (it has a length), so check identity, not truth.
    event = CompetitionEvent(rulebook, EventLedger() if ledger is None else ledger)
    if len(event.ledger):
        raise ConfigError("demo data needs an empty ledger")

    when = REGISTRATION_DAY
    for team_id, name, institution, league in TEAM_ROWS:
        event.register_team(
            Team(id=team_id, name=name, institution=institution, league_id=league),
            now=when,
        )
    for official_id, name, league, role in OFFICIAL_ROWS:
        event.register_team(
            Team(
                id=official_id,
                name=name,
                institution="Organizing Committee",
                league_id=league,
                roles=frozenset({role}),
            ),
            now=when,
        )
    for window in WINDOWS:
        event.add_upload_window(window, now=when, actor="committee")

    for record, uploaded_at in _module_catalog():
        event.upload_module(record, now=uploaded_at, actor=sorted(record.developer_team_ids)[0])

    team_league = {row[0]: row[3] for row in TEAM_ROWS}
    for decl_id, user, module_id, league, task, milestone, day in DECLARATIONS:
        if day < 0:
            declared_at = FREEZE_AT + timedelta(days=day, hours=2)
        else:
            declared_at = EVENT_DAY + timedelta(days=day - 1, hours=1)
        event.declare_integration(
            IntegrationDeclaration(
                id=decl_id,
                user_team_id=user,
                module_id=module_id,
                league_id=league,
                task_id=task,
                milestone_id=milestone,
                declared_at=declared_at,
            ),
            actor=user,
        )
        event.verify_declaration(
            decl_id,
            now=declared_at + timedelta(hours=1),
            actor=_REFEREES[team_league[user]],
        )
        if day < 0 and declared_at >= FREEZE_AT:
            raise ConfigError(f"{decl_id} was meant to predate the freeze")

    event.freeze_marketplace(FREEZE_AT, actor="committee")

    for team_id, task_id, level, hour, outcomes, overrides in ATTEMPTS:
        referee = _REFEREES[team_league[team_id]]
        opened = EVENT_DAY + timedelta(hours=hour)
        session = event.open_attempt(team_id, task_id, level, opened, actor=referee)
        tick = opened
        for milestone_id, success, ms_level, q, penalties in outcomes:
            tick += timedelta(seconds=45)
            event.record_milestone_outcome(
                session.id,
                MilestoneResult(
                    milestone_id=milestone_id,
                    success=success,
                    level=ms_level,
                    subjective_score=Fraction(q),
                    penalties_incurred=tuple(penalties),
                ),
                now=tick,
                actor=referee,
            )
        for milestone_id, q in overrides:
            tick += timedelta(seconds=30)
            event.record_subjective_score(
                session.id, milestone_id, Fraction(q), now=tick, actor="evaluator-1"
            )
        event.close_attempt(session.id, opened + timedelta(minutes=9), actor=referee)

    return event


def write_demo_dataset(
    data_dir: Path, rulebook: Rulebook | None = None, force: bool = False
) -> DemoSummary:
    """Write the demo ledger and token file into a data directory."""
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    ledger_path = data_dir / LEDGER_FILENAME
    tokens_path = data_dir / TOKENS_FILENAME
    for path in (ledger_path, tokens_path):
        if path.exists():
            if not force:
                raise ConfigError(f"{path} already exists; pass force to overwrite")
            path.unlink()

    event = build_demo_event(rulebook, EventLedger(ledger_path))
    tokens_path.write_text(
        json.dumps({"tokens": demo_tokens()}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return DemoSummary(
        teams=len(TEAM_ROWS),
        modules=len(event.marketplace.list_modules(include_removed=True)),
        declarations=len(event.marketplace.list_declarations()),
        attempts=len(event.sessions()),
        ledger_path=ledger_path,
        tokens_path=tokens_path,
    )
