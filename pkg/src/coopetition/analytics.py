"""Transfer graph construction, export, and reuse statistics.

The graph has one node per competing team, weighted by that team's
royalty total, and one directed edge per (developer, user, module)
triple drawn from integration declarations. Declarations made before
the cutoff instant (the marketplace freeze, unless overridden) are
tagged pre-event, later ones post-event; a post-event snapshot keeps
every edge, a pre-event snapshot keeps only the early ones.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from fractions import Fraction
from typing import Any, Mapping

from .errors import UnsupportedFormat, ValidationError
from .marketplace import ModuleCategory
from .numeric import as_fraction, fraction_payload, render_decimal
from .runtime import CompetitionEvent, Role


class Phase(str, Enum):
    PRE_EVENT = "pre_event"
    POST_EVENT = "post_event"


# Node width range in Graphviz inches; zero royalties draw at the minimum.
NODE_SIZE_MIN = Fraction(3, 10)
NODE_SIZE_MAX = Fraction(6, 5)

# One color per module category, in enum order.
CATEGORY_COLORS: Mapping[ModuleCategory, str] = {
    ModuleCategory.RIGID_BODY_DYNAMICS_CONTROL: "#1f77b4",
    ModuleCategory.POSE_ESTIMATION_VISION_DETECTION: "#ff7f0e",
    ModuleCategory.SIMULATION_DIGITAL_ENVIRONMENTS: "#2ca02c",
    ModuleCategory.LOCALIZATION_MAPPING: "#d62728",
    ModuleCategory.DATASETS_MODELS: "#9467bd",
    ModuleCategory.SPEECH_COMMUNICATION: "#8c564b",
    ModuleCategory.OTHER: "#7f7f7f",
}


@dataclass(frozen=True)
class GraphNode:
    team_id: str
    league_id: str
    royalty_weight: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "royalty_weight", as_fraction(self.royalty_weight))
        if self.royalty_weight < 0:
            raise ValidationError(f"node {self.team_id!r} has negative royalty weight")


@dataclass(frozen=True)
class GraphEdge:
    developer_team_id: str
    user_team_id: str
    module_id: str
    category: ModuleCategory
    verified: bool
    phase: Phase


@dataclass(frozen=True)
class TransferGraph:
    nodes: tuple[GraphNode, ...]
    edges: tuple[GraphEdge, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.team_id))
        )
        object.__setattr__(
            self,
            "edges",
            tuple(
                sorted(
                    self.edges,
                    key=lambda e: (e.developer_team_id, e.user_team_id, e.module_id),
                )
            ),
        )
        ids = {node.team_id for node in self.nodes}
        if len(ids) != len(self.nodes):
            raise ValidationError("duplicate node team ids")
        for edge in self.edges:
            if edge.developer_team_id == edge.user_team_id:
                raise ValidationError(f"self-loop on {edge.user_team_id!r}")
            for endpoint in (edge.developer_team_id, edge.user_team_id):
                if endpoint not in ids:
                    raise ValidationError(f"edge endpoint {endpoint!r} has no node")

    def node(self, team_id: str) -> GraphNode:
        for candidate in self.nodes:
            if candidate.team_id == team_id:
                return candidate
        raise ValidationError(f"no node for team {team_id!r}")

    def snapshot(self, phase: Phase) -> "TransferGraph":
        """The graph as it stood in the given phase.

        Post-event keeps everything; pre-event keeps only edges whose
        declaration predates the cutoff.
        """
        phase = Phase(phase)
        if phase is Phase.POST_EVENT:
            return self
        kept = tuple(edge for edge in self.edges if edge.phase is Phase.PRE_EVENT)
        return TransferGraph(nodes=self.nodes, edges=kept)

    def component_count(self) -> int:
        """Weakly connected components among teams with at least one edge."""
        adjacency: dict[str, set[str]] = {}
        for edge in self.edges:
            adjacency.setdefault(edge.developer_team_id, set()).add(edge.user_team_id)
            adjacency.setdefault(edge.user_team_id, set()).add(edge.developer_team_id)
        remaining = set(adjacency)
        components = 0
        while remaining:
            components += 1
            frontier = [remaining.pop()]
            while frontier:
                for neighbor in adjacency[frontier.pop()]:
                    if neighbor in remaining:
                        remaining.remove(neighbor)
                        frontier.append(neighbor)
        return components


@dataclass(frozen=True)
class ReuseStats:
    modules_total: int
    uploads_per_window: Mapping[str, int]
    integrations_per_category: Mapping[str, int]
    integrations_per_league: Mapping[str, int]
    connected_components: Mapping[str, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "uploads_per_window", dict(self.uploads_per_window))
        object.__setattr__(
            self, "integrations_per_category", dict(self.integrations_per_category)
        )
        object.__setattr__(
            self, "integrations_per_league", dict(self.integrations_per_league)
        )
        object.__setattr__(self, "connected_components", dict(self.connected_components))


def _cutoff_for(event: CompetitionEvent, cutoff: datetime | None) -> datetime | None:
    return cutoff if cutoff is not None else event.marketplace.frozen_at


def _counted_triples(
    event: CompetitionEvent, cutoff: datetime | None, include_unverified: bool
) -> dict[tuple[str, str, str], tuple[bool, Phase]]:
    """(developer, user, module) -> (verified, phase) over counted declarations.

    Unverified declarations count only under trust-based operation, and
    stay flagged. A triple declared several times takes its earliest
    declaration for the phase and is verified if any declaration is.
    """
    team_ids = {team.id for team in event.teams()}
    earliest: dict[tuple[str, str, str], datetime] = {}
    verified: dict[tuple[str, str, str], bool] = {}
    for declaration in event.marketplace.list_declarations():
        if not declaration.verified and not include_unverified:
            continue
        module = event.marketplace.module(declaration.module_id)
        for developer in sorted(module.developer_team_ids):
            if developer == declaration.user_team_id:
                continue
            if developer not in team_ids or declaration.user_team_id not in team_ids:
                continue
            key = (developer, declaration.user_team_id, module.id)
            if key not in earliest or declaration.declared_at < earliest[key]:
                earliest[key] = declaration.declared_at
            verified[key] = verified.get(key, False) or declaration.verified
    result: dict[tuple[str, str, str], tuple[bool, Phase]] = {}
    for key, declared_at in earliest.items():
        phase = (
            Phase.PRE_EVENT
            if cutoff is None or declared_at < cutoff
            else Phase.POST_EVENT
        )
        result[key] = (verified[key], phase)
    return result


def build_transfer_graph(
    event: CompetitionEvent,
    cutoff: datetime | None = None,
    include_unverified: bool | None = None,
) -> TransferGraph:
    """Snapshot the who-integrated-whose-module graph from event state.

    Nodes are the competing teams (officials carry no team role and are
    left out), weighted by their royalty totals. The cutoff defaults to
    the marketplace freeze; before any freeze every edge is pre-event.
    """
    if include_unverified is None:
        include_unverified = event.marketplace.auto_verify
    cutoff = _cutoff_for(event, cutoff)
    nodes = []
    for team in event.teams():
        if Role.TEAM not in team.roles:
            continue
        royalties = event.team_totals(team.id)[1]
        nodes.append(
            GraphNode(team_id=team.id, league_id=team.league_id, royalty_weight=royalties)
        )
    edges = []
    for (developer, user, module_id), (is_verified, phase) in _counted_triples(
        event, cutoff, include_unverified
    ).items():
        edges.append(
            GraphEdge(
                developer_team_id=developer,
                user_team_id=user,
                module_id=module_id,
                category=event.marketplace.module(module_id).category,
                verified=is_verified,
                phase=phase,
            )
        )
    return TransferGraph(nodes=tuple(nodes), edges=tuple(edges))


def reuse_stats(event: CompetitionEvent, cutoff: datetime | None = None) -> ReuseStats:
    """Marketplace usage counters plus component counts per phase.

    An integration is a distinct (user team, module) pair, attributed
    to the user team's league; a co-developed module integrated by one
    team counts once here even though it contributes one graph edge per
    developer.
    """
    market = event.marketplace
    uploads = market.uploads_per_window()
    modules_total = sum(uploads.values()) - market.removed_count()
    triples = _counted_triples(event, _cutoff_for(event, cutoff), market.auto_verify)
    pairs = {(user, module_id) for (_, user, module_id) in triples}
    by_category: Counter[str] = Counter()
    by_league: Counter[str] = Counter()
    for user, module_id in sorted(pairs):
        by_category[market.module(module_id).category.value] += 1
        by_league[event.team(user).league_id] += 1
    graph = build_transfer_graph(event, cutoff)
    return ReuseStats(
        modules_total=modules_total,
        uploads_per_window=uploads,
        integrations_per_category=dict(by_category),
        integrations_per_league=dict(by_league),
        connected_components={
            Phase.PRE_EVENT.value: graph.snapshot(Phase.PRE_EVENT).component_count(),
            Phase.POST_EVENT.value: graph.component_count(),
        },
    )


def _node_sizes(graph: TransferGraph) -> dict[str, Fraction]:
    heaviest = max((node.royalty_weight for node in graph.nodes), default=Fraction(0))
    sizes = {}
    for node in graph.nodes:
        if heaviest == 0:
            sizes[node.team_id] = NODE_SIZE_MIN
        else:
            sizes[node.team_id] = NODE_SIZE_MIN + (
                node.royalty_weight / heaviest
            ) * (NODE_SIZE_MAX - NODE_SIZE_MIN)
    return sizes


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _to_dot(graph: TransferGraph) -> str:
    lines = [
        "digraph transfers {",
        "  // Node width in inches grows linearly with the team's royalty total,",
        f"  // from {render_decimal(NODE_SIZE_MIN)} (zero) to {render_decimal(NODE_SIZE_MAX)} (heaviest). Edge color keys the module",
        "  // category, in declaration order of the category names:",
    ]
    for category, color in CATEGORY_COLORS.items():
        lines.append(f"  //   {category.value} = {color}")
    lines.append("  rankdir=LR;")
    lines.append("  node [shape=circle, fixedsize=true];")
    sizes = _node_sizes(graph)
    for node in graph.nodes:
        attrs = ", ".join(
            [
                f"width={render_decimal(sizes[node.team_id])}",
                f"league={_quote(node.league_id)}",
                f"royalties={_quote(render_decimal(node.royalty_weight))}",
            ]
        )
        lines.append(f"  {_quote(node.team_id)} [{attrs}];")
    for edge in graph.edges:
        attrs = ", ".join(
            [
                f"color={_quote(CATEGORY_COLORS[edge.category])}",
                f"module={_quote(edge.module_id)}",
                f"phase={_quote(edge.phase.value)}",
                f"style={'solid' if edge.verified else 'dashed'}",
            ]
        )
        lines.append(
            f"  {_quote(edge.developer_team_id)} -> {_quote(edge.user_team_id)} [{attrs}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def _to_json(graph: TransferGraph) -> str:
    document = {
        "nodes": [
            {
                "team_id": node.team_id,
                "league_id": node.league_id,
                "royalty_weight": fraction_payload(node.royalty_weight),
            }
            for node in graph.nodes
        ],
        "edges": [
            {
                "developer_team_id": edge.developer_team_id,
                "user_team_id": edge.user_team_id,
                "module_id": edge.module_id,
                "category": edge.category.value,
                "verified": edge.verified,
                "phase": edge.phase.value,
            }
            for edge in graph.edges
        ],
    }
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def export_graph(graph: TransferGraph, format: str = "json") -> bytes:
    if format == "dot":
        return _to_dot(graph).encode("utf-8")
    if format == "json":
        return _to_json(graph).encode("utf-8")
    raise UnsupportedFormat(f"unknown graph format {format!r}; use dot or json")


def import_graph(payload: bytes | str | Mapping[str, Any]) -> TransferGraph:
    if isinstance(payload, (bytes, str)):
        document = json.loads(payload)
    else:
        document = payload
    nodes = tuple(
        GraphNode(
            team_id=item["team_id"],
            league_id=item["league_id"],
            royalty_weight=Fraction(
                item["royalty_weight"]["numerator"], item["royalty_weight"]["denominator"]
            ),
        )
        for item in document["nodes"]
    )
    edges = tuple(
        GraphEdge(
            developer_team_id=item["developer_team_id"],
            user_team_id=item["user_team_id"],
            module_id=item["module_id"],
            category=ModuleCategory(item["category"]),
            verified=item["verified"],
            phase=Phase(item["phase"]),
        )
        for item in document["edges"]
    )
    return TransferGraph(nodes=nodes, edges=edges)
