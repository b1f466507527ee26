// Transfer-graph presentation geometry: node radii from the server's
// royalty weights, connected components for the caption, and a plain
// force-directed layout. Weights come straight from the payload; the
// scaling here is pixels, not scoring.

import type { GraphPayload } from "./types.js";

export const MIN_RADIUS = 12;
export const MAX_RADIUS = 48;

const CATEGORY_COLORS: Record<string, string> = {
  rigid_body_dynamics_control: "#1f77b4",
  pose_estimation_vision_detection: "#ff7f0e",
  simulation_digital_environments: "#2ca02c",
  localization_mapping: "#d62728",
  datasets_models: "#9467bd",
  speech_communication: "#8c564b",
  other: "#7f7f7f",
};

export function edgeColor(category: string): string {
  return CATEGORY_COLORS[category] ?? CATEGORY_COLORS.other;
}

/** Radius per team: linear in royalty weight, uniform minimum when all are zero. */
export function nodeRadii(graph: GraphPayload): Map<string, number> {
  const weights = new Map<string, number>();
  let heaviest = 0;
  for (const node of graph.nodes) {
    const weight = node.royalty_weight.numerator / node.royalty_weight.denominator;
    weights.set(node.team_id, weight);
    heaviest = Math.max(heaviest, weight);
  }
  const radii = new Map<string, number>();
  for (const [teamId, weight] of weights) {
    const share = heaviest === 0 ? 0 : weight / heaviest;
    radii.set(teamId, MIN_RADIUS + share * (MAX_RADIUS - MIN_RADIUS));
  }
  return radii;
}

/** Weakly connected components among teams that have at least one edge. */
export function componentCount(graph: GraphPayload): number {
  const adjacency = new Map<string, Set<string>>();
  const link = (a: string, b: string) => {
    if (!adjacency.has(a)) {
      adjacency.set(a, new Set());
    }
    adjacency.get(a)!.add(b);
  };
  for (const edge of graph.edges) {
    link(edge.developer_team_id, edge.user_team_id);
    link(edge.user_team_id, edge.developer_team_id);
  }
  const unvisited = new Set(adjacency.keys());
  let components = 0;
  while (unvisited.size > 0) {
    components += 1;
    const queue = [unvisited.values().next().value as string];
    while (queue.length > 0) {
      const current = queue.pop()!;
      if (!unvisited.delete(current)) {
        continue;
      }
      for (const neighbor of adjacency.get(current) ?? []) {
        if (unvisited.has(neighbor)) {
          queue.push(neighbor);
        }
      }
    }
  }
  return components;
}

export interface LayoutPoint {
  x: number;
  y: number;
}

export interface LayoutOptions {
  width: number;
  height: number;
  iterations?: number;
}

/**
 * Textbook force-directed placement: spring attraction along edges,
 * pairwise repulsion, slow cooling. Initial positions sit on a circle
 * in node order, so the same payload always lays out the same way.
 */
export function forceLayout(graph: GraphPayload, options: LayoutOptions): Map<string, LayoutPoint> {
  const { width, height } = options;
  const iterations = options.iterations ?? 150;
  const ids = graph.nodes.map((node) => node.team_id);
  const positions = new Map<string, LayoutPoint>();
  const count = Math.max(1, ids.length);
  const ringRadius = Math.min(width, height) / 3;
  ids.forEach((id, index) => {
    const angle = (2 * Math.PI * index) / count;
    positions.set(id, {
      x: width / 2 + ringRadius * Math.cos(angle),
      y: height / 2 + ringRadius * Math.sin(angle),
    });
  });
  if (ids.length < 2) {
    return positions;
  }

  const area = width * height;
  const ideal = Math.sqrt(area / count) / 2;
  const links = graph.edges
    .filter((edge) => positions.has(edge.developer_team_id) && positions.has(edge.user_team_id))
    .map((edge) => [edge.developer_team_id, edge.user_team_id] as const);

  for (let step = 0; step < iterations; step += 1) {
    const temperature = (ideal * (iterations - step)) / iterations;
    const forces = new Map<string, LayoutPoint>(ids.map((id) => [id, { x: 0, y: 0 }]));

    for (let i = 0; i < ids.length; i += 1) {
      for (let j = i + 1; j < ids.length; j += 1) {
        const a = positions.get(ids[i])!;
        const b = positions.get(ids[j])!;
        const dx = a.x - b.x;
        const dy = a.y - b.y;
        const distance = Math.max(0.01, Math.hypot(dx, dy));
        const push = (ideal * ideal) / distance;
        const fa = forces.get(ids[i])!;
        const fb = forces.get(ids[j])!;
        fa.x += (dx / distance) * push;
        fa.y += (dy / distance) * push;
        fb.x -= (dx / distance) * push;
        fb.y -= (dy / distance) * push;
      }
    }
    for (const [from, to] of links) {
      const a = positions.get(from)!;
      const b = positions.get(to)!;
      const dx = a.x - b.x;
      const dy = a.y - b.y;
      const distance = Math.max(0.01, Math.hypot(dx, dy));
      const pull = (distance * distance) / ideal;
      const fa = forces.get(from)!;
      const fb = forces.get(to)!;
      fa.x -= (dx / distance) * pull;
      fa.y -= (dy / distance) * pull;
      fb.x += (dx / distance) * pull;
      fb.y += (dy / distance) * pull;
    }
    for (const id of ids) {
      const position = positions.get(id)!;
      const force = forces.get(id)!;
      const magnitude = Math.max(0.01, Math.hypot(force.x, force.y));
      const stepSize = Math.min(magnitude, temperature);
      position.x += (force.x / magnitude) * stepSize;
      position.y += (force.y / magnitude) * stepSize;
      position.x = Math.min(width - MIN_RADIUS, Math.max(MIN_RADIUS, position.x));
      position.y = Math.min(height - MIN_RADIUS, Math.max(MIN_RADIUS, position.y));
    }
  }
  return positions;
}
