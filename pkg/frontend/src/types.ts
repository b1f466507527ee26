// API payload shapes, mirrored field-for-field from the backend JSON.
// Numbers that carry score semantics arrive as exact-fraction triples;
// the console renders the decimal string and never recomputes them.

export interface FractionValue {
  decimal: string;
  numerator: number;
  denominator: number;
}

export interface ApiErrorBody {
  type: string;
  detail: string;
}

export interface TeamPayload {
  id: string;
  name: string;
  institution: string;
  league_id: string;
  robot_description: string;
  roles: string[];
}

export interface ModulePayload {
  id: string;
  name: string;
  category: string;
  kind: string;
  developer_team_ids: string[];
  royalty_rate: string | null;
  uploaded_at: string | null;
  upload_window_id: string | null;
  description: string;
  artifact_uri: string;
  status: string;
}

export interface DeclarationPayload {
  id: string;
  user_team_id: string;
  module_id: string;
  league_id: string;
  task_id: string;
  milestone_id: string;
  declared_at: string;
  verified: boolean;
}

export interface MilestoneResultPayload {
  milestone_id: string;
  success: boolean;
  level: string;
  subjective_score: FractionValue;
  penalties_incurred: string[];
  external_module_ids: string[];
}

export interface SessionPayload {
  id: string;
  team_id: string;
  league_id: string;
  task_id: string;
  attempt_number: number;
  task_level: string;
  state: string;
  started_at: string;
  deadline: string;
  closed_at: string | null;
  results: MilestoneResultPayload[];
}

export interface MilestoneLinePayload {
  milestone_id: string;
  points: FractionValue;
  retention: FractionValue;
  contribution: FractionValue;
  transfer: boolean;
}

export interface RoyaltyEntryPayload {
  developer_team_id: string;
  user_team_id: string;
  league_id: string;
  task_id: string;
  milestone_id: string;
  module_id: string;
  amount: FractionValue;
}

export interface BreakdownPayload {
  team_id: string;
  league_id: string;
  task_id: string;
  attempt_number: number;
  task_factor: FractionValue;
  milestones: MilestoneLinePayload[];
  task_points: FractionValue;
  royalties: RoyaltyEntryPayload[];
  challenge_points?: FractionValue;
  royalty_points?: FractionValue;
  coopetition_points?: FractionValue;
}

export interface LeaderboardRowPayload {
  team_id: string;
  team_name: string;
  challenge_points: FractionValue;
  royalty_points: FractionValue;
  coopetition_points: FractionValue;
}

export interface GraphNodePayload {
  team_id: string;
  league_id: string;
  royalty_weight: FractionValue;
}

export interface GraphEdgePayload {
  developer_team_id: string;
  user_team_id: string;
  module_id: string;
  category: string;
  verified: boolean;
  phase: string;
}

export interface GraphPayload {
  nodes: GraphNodePayload[];
  edges: GraphEdgePayload[];
}

export interface StatsPayload {
  modules_total: number;
  uploads_per_window: Record<string, number>;
  integrations_per_category: Record<string, number>;
  integrations_per_league: Record<string, number>;
  connected_components: Record<string, number>;
  marketplace: {
    frozen: boolean;
    frozen_at: string | null;
  };
}

export interface CommandPayload {
  league_id: string;
  task_number: number;
  assignments: Record<string, string>;
  text: string;
  seed: number;
  task_factor: FractionValue;
  notes: string[];
}

export interface OutcomeRequest {
  milestone_id: string;
  success?: boolean;
  level?: string;
  subjective_score?: number | string;
  penalties?: string[];
  external_module_ids?: string[];
}
