"""Seedable command generation for the service and delivery leagues.

Commands are drawn from configurable variable domains. Teams may pin a
subset of the variables ahead of a run; the pin count selects the task
conditional factor from the league tables (0 pins keeps 1.0, one pin
drops to 0.7, two to 0.4, three or more to 0.3).

Determinism contract: a draw source is seeded per call, variables are
drawn in a fixed order (the canonical assignment order below), pinned
variables consume no randomness, and a draw over a single option
consumes no randomness either. Given the same domain, pins, task number
and seed, two calls produce identical commands on any platform.
"""

from __future__ import annotations

import random
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .errors import DegenerateDomain, InvalidPin, InvalidTask
from .numeric import fraction_payload

TERMINAL_ACTIONS = ("place", "give")

SRL_PIN_VARIABLES = ("kitchen_i", "kitchen_j", "location_i", "location_j", "object", "action")
ORL_PIN_VARIABLES = ("parcel", "pickup_point", "delivery_point")

# Locations where an object rests on top rather than inside.
_SURFACE_LOCATIONS = frozenset({"Table", "Counter"})

# Parcel sizing by robot class. Advisory only: the generator does not
# know which platform will run the command, so a mismatch is a note on
# the output, never an error.
PARCEL_PLATFORMS: Mapping[str, str] = {"A0": "aerial", "A1": "aerial", "A2": "ground"}

# Members beyond Pringles are venue configuration; replace per event.
# Surprise items are chosen on site by referees, so that set ships empty.
DEFAULT_OBJECT_SETS: Mapping[str, tuple[str, ...]] = {
    "YCB Dataset Subset": (
        "Pringles",
        "Mustard bottle",
        "Tomato soup can",
        "Cracker box",
        "Tennis ball",
    ),
    "KIT Dataset Subset": (
        "Amicelli box",
        "Choco Krispies box",
        "Instant soup box",
        "Shampoo bottle",
    ),
    "Unknown Objects": (),
}


@dataclass(frozen=True)
class VariableDomain:
    """Value pools the generator draws from.

    Every list used by the league being generated must be non-empty.
    Point labels are venue configuration; the default covers A through J.
    """

    kitchens: tuple[str, ...] = ("DLR", "KIT", "INRIA")
    locations: tuple[str, ...] = ("Dishwasher", "Table", "Cabinet", "Counter")
    object_sets: Mapping[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_OBJECT_SETS)
    )
    parcels: tuple[str, ...] = ("A0", "A1", "A2")
    points: tuple[str, ...] = tuple("ABCDEFGHIJ")

    def __post_init__(self) -> None:
        object.__setattr__(self, "kitchens", tuple(self.kitchens))
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(
            self,
            "object_sets",
            {name: tuple(members) for name, members in self.object_sets.items()},
        )
        object.__setattr__(self, "parcels", tuple(self.parcels))
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def objects(self) -> tuple[str, ...]:
        """All drawable objects, deduplicated, in object-set order."""
        seen: dict[str, None] = {}
        for members in self.object_sets.values():
            for name in members:
                seen.setdefault(name)
        return tuple(seen)


DEFAULT_DOMAIN = VariableDomain()

_PIN_FACTORS = {0: Fraction(1), 1: Fraction(7, 10), 2: Fraction(2, 5)}


@dataclass(frozen=True)
class PinSet:
    """Variables a team fixed ahead of the draw, with their values."""

    pins: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pins", dict(self.pins))

    def __contains__(self, variable: str) -> bool:
        return variable in self.pins

    def __len__(self) -> int:
        return len(self.pins)

    def get(self, variable: str) -> str | None:
        return self.pins.get(variable)

    @property
    def task_factor(self) -> Fraction:
        """Conditional factor from the league tables for this pin count."""
        return _PIN_FACTORS.get(len(self.pins), Fraction(3, 10))


@dataclass(frozen=True)
class GeneratedCommand:
    league_id: str
    task_number: int
    assignments: Mapping[str, str]
    text: str
    seed: int
    task_factor: Fraction
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignments", dict(self.assignments))
        object.__setattr__(self, "notes", tuple(self.notes))


class CommandRng:
    """Auditable draw source for referee-supervised generation.

    Words come from the Mersenne Twister (seeded ``random.Random``) via
    ``getrandbits(64)``; a draw over ``n`` options takes words by
    rejection sampling below the largest multiple of ``n`` and reduces
    modulo ``n``. The mapping from words to choices lives entirely here,
    so a dispute can be settled by replaying the word stream by hand.
    """

    def __init__(self, seed: int) -> None:
        self._words = random.Random(seed)

    def pick(self, options: Sequence[str]) -> str:
        if not options:
            raise DegenerateDomain("no options left to draw from")
        n = len(options)
        if n == 1:
            return options[0]
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            word = self._words.getrandbits(64)
            if word < limit:
                return options[word % n]


def _require_task(task_number: int) -> None:
    if task_number not in (1, 2, 3):
        raise InvalidTask(f"task number must be 1, 2 or 3, got {task_number!r}")


def _check_pins(pins: PinSet, allowed: Sequence[str], domains: Mapping[str, Sequence[str]]) -> None:
    for variable, value in pins.pins.items():
        if variable not in allowed:
            raise InvalidPin(f"{variable!r} is not a pinnable variable for this league")
        if value not in domains[variable]:
            raise InvalidPin(f"{variable} pin {value!r} is outside its domain")


def render_srl_command(assignments: Mapping[str, str]) -> str:
    obj = assignments["object"]
    pronoun = "them" if obj.lower().endswith("s") else "it"
    pick = f"Pick the {obj} from the {assignments['kitchen_i']} {assignments['location_i'].lower()}"
    if assignments["action"] == "give":
        return f"{pick} and give {pronoun} to the person in the {assignments['kitchen_j']} kitchen."
    location = assignments["location_j"]
    preposition = "on" if location in _SURFACE_LOCATIONS else "in"
    return f"{pick} and place {pronoun} {preposition} the {assignments['kitchen_j']} {location.lower()}."


def render_orl_command(assignments: Mapping[str, str]) -> str:
    return (
        f"Pick parcel {assignments['parcel']} from Pick-Up Point "
        f"{assignments['pickup_point']} and deliver it to Point {assignments['delivery_point']}"
    )


def generate_srl(
    domain: VariableDomain,
    task_number: int,
    base_kitchen: str,
    pins: PinSet | None = None,
    seed: int = 0,
) -> GeneratedCommand:
    """Draw a multi-functional task command.

    Task 1 keeps both kitchens at the team's base; task 2 draws the
    destination kitchen; task 3 draws both. The destination of task 2
    may coincide with the base kitchen, in which case the command
    carries a note. The terminal action is drawn from place and give;
    the drop-off location is part of every assignment but only rendered
    for place.
    """
    _require_task(task_number)
    pins = pins or PinSet()
    if base_kitchen not in domain.kitchens:
        raise InvalidPin(f"base kitchen {base_kitchen!r} is outside the kitchen domain")
    _check_pins(
        pins,
        SRL_PIN_VARIABLES,
        {
            "kitchen_i": domain.kitchens,
            "kitchen_j": domain.kitchens,
            "location_i": domain.locations,
            "location_j": domain.locations,
            "object": domain.objects,
            "action": TERMINAL_ACTIONS,
        },
    )

    structural: dict[str, str] = {}
    if task_number in (1, 2):
        structural["kitchen_i"] = base_kitchen
    if task_number == 1:
        structural["kitchen_j"] = base_kitchen

    rng = CommandRng(seed)
    assignments: dict[str, str] = {}
    for variable in ("kitchen_i", "kitchen_j"):
        pinned = pins.get(variable)
        if variable in structural:
            if pinned is not None and pinned != structural[variable]:
                raise InvalidPin(
                    f"{variable} pin {pinned!r} conflicts with task {task_number}, "
                    f"which fixes it to {structural[variable]!r}"
                )
            assignments[variable] = structural[variable]
        else:
            assignments[variable] = pinned if pinned is not None else rng.pick(domain.kitchens)
    for variable, pool in (
        ("location_i", domain.locations),
        ("location_j", domain.locations),
        ("object", domain.objects),
        ("action", TERMINAL_ACTIONS),
    ):
        pinned = pins.get(variable)
        assignments[variable] = pinned if pinned is not None else rng.pick(pool)

    notes: list[str] = []
    if task_number == 2 and assignments["kitchen_j"] == base_kitchen:
        notes.append("destination kitchen coincides with the base kitchen")

    return GeneratedCommand(
        league_id="SRL",
        task_number=task_number,
        assignments=assignments,
        text=render_srl_command(assignments),
        seed=seed,
        task_factor=pins.task_factor,
        notes=tuple(notes),
    )


def generate_orl(
    domain: VariableDomain,
    task_number: int,
    pins: PinSet | None = None,
    seed: int = 0,
) -> GeneratedCommand:
    """Draw a parcel delivery command.

    Pick-up and delivery points always differ; whichever of the two is
    drawn is uniform over the points the constraint leaves open.
    """
    _require_task(task_number)
    pins = pins or PinSet()
    _check_pins(
        pins,
        ORL_PIN_VARIABLES,
        {
            "parcel": domain.parcels,
            "pickup_point": domain.points,
            "delivery_point": domain.points,
        },
    )
    pickup_pin = pins.get("pickup_point")
    delivery_pin = pins.get("delivery_point")
    if pickup_pin is not None and pickup_pin == delivery_pin:
        raise InvalidPin("pick-up and delivery points must differ")
    if pickup_pin is None and delivery_pin is None and len(domain.points) < 2:
        raise DegenerateDomain("at least two points are needed to draw distinct ones")

    rng = CommandRng(seed)
    assignments: dict[str, str] = {}
    parcel_pin = pins.get("parcel")
    assignments["parcel"] = parcel_pin if parcel_pin is not None else rng.pick(domain.parcels)
    if pickup_pin is not None:
        assignments["pickup_point"] = pickup_pin
    else:
        assignments["pickup_point"] = rng.pick(
            [point for point in domain.points if point != delivery_pin]
        )
    if delivery_pin is not None:
        assignments["delivery_point"] = delivery_pin
    else:
        assignments["delivery_point"] = rng.pick(
            [point for point in domain.points if point != assignments["pickup_point"]]
        )

    notes: list[str] = []
    platform = PARCEL_PLATFORMS.get(assignments["parcel"])
    if platform is not None:
        notes.append(f"parcel {assignments['parcel']} is sized for {platform} platforms")

    return GeneratedCommand(
        league_id="ORL",
        task_number=task_number,
        assignments=assignments,
        text=render_orl_command(assignments),
        seed=seed,
        task_factor=pins.task_factor,
        notes=tuple(notes),
    )


def command_payload(command: GeneratedCommand) -> dict[str, Any]:
    return {
        "league_id": command.league_id,
        "task_number": command.task_number,
        "assignments": dict(command.assignments),
        "text": command.text,
        "seed": command.seed,
        "task_factor": fraction_payload(command.task_factor),
        "notes": list(command.notes),
    }
