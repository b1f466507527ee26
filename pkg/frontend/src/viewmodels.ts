// Pure payload-to-display mapping. Nothing in here computes a score:
// every number shown comes out of an API field unchanged, and the only
// arithmetic is clock subtraction for the countdown.

import type {
  BreakdownPayload,
  LeaderboardRowPayload,
  ModulePayload,
  RoyaltyEntryPayload,
  SessionPayload,
  StatsPayload,
} from "./types.js";

export interface CountdownState {
  remainingSeconds: number;
  label: string;
  expired: boolean;
}

/** Time left until the server-issued deadline; the server still enforces it. */
export function countdown(deadlineIso: string, nowMs: number): CountdownState {
  const deadlineMs = Date.parse(deadlineIso);
  const remainingSeconds = Math.max(0, Math.floor((deadlineMs - nowMs) / 1000));
  const minutes = Math.floor(remainingSeconds / 60);
  const seconds = remainingSeconds % 60;
  return {
    remainingSeconds,
    label: `${minutes}:${String(seconds).padStart(2, "0")}`,
    expired: remainingSeconds <= 0,
  };
}

export interface RefereeControlsState {
  inputsDisabled: boolean;
  canClose: boolean;
  banner: string | null;
}

/** Inputs lock when the attempt is no longer running or the timer hit zero. */
export function refereeControls(session: SessionPayload, nowMs: number): RefereeControlsState {
  if (session.state !== "running") {
    return {
      inputsDisabled: true,
      canClose: false,
      banner: `Attempt is ${session.state}.`,
    };
  }
  const clock = countdown(session.deadline, nowMs);
  if (clock.expired) {
    return {
      inputsDisabled: true,
      canClose: true,
      banner: "Time is up. Close the attempt to record the score.",
    };
  }
  return { inputsDisabled: false, canClose: true, banner: null };
}

export interface ChecklistRow {
  milestoneId: string;
  outcome: "succeeded" | "failed";
  level: string;
  subjectiveScore: string;
  penalties: string;
  transferModules: string;
}

/** Recorded outcomes of a session, one row per milestone. */
export function milestoneChecklist(session: SessionPayload): ChecklistRow[] {
  return session.results.map((result) => ({
    milestoneId: result.milestone_id,
    outcome: result.success ? "succeeded" : "failed",
    level: result.level,
    subjectiveScore: result.subjective_score.decimal,
    penalties: result.penalties_incurred.join(", ") || "none",
    transferModules: result.external_module_ids.join(", ") || "none",
  }));
}

export interface ScoreViewRow {
  milestoneId: string;
  points: string;
  retention: string;
  contribution: string;
  transfer: boolean;
}

export interface ScoreView {
  teamId: string;
  taskId: string;
  attemptNumber: number;
  taskFactor: string;
  taskPoints: string;
  rows: ScoreViewRow[];
  royalties: { developer: string; module: string; amount: string }[];
}

/** Display form of a score breakdown; decimals are passed through verbatim. */
export function scoreView(score: BreakdownPayload): ScoreView {
  return {
    teamId: score.team_id,
    taskId: score.task_id,
    attemptNumber: score.attempt_number,
    taskFactor: score.task_factor.decimal,
    taskPoints: score.task_points.decimal,
    rows: score.milestones.map((line) => ({
      milestoneId: line.milestone_id,
      points: line.points.decimal,
      retention: line.retention.decimal,
      contribution: line.contribution.decimal,
      transfer: line.transfer,
    })),
    royalties: score.royalties.map((entry) => ({
      developer: entry.developer_team_id,
      module: entry.module_id,
      amount: entry.amount.decimal,
    })),
  };
}

export interface LeaderboardViewRow {
  rank: number;
  teamId: string;
  teamName: string;
  challenge: string;
  royalties: string;
  total: string;
}

/** Rows exactly as the API ordered them; rank is positional only. */
export function leaderboardView(rows: LeaderboardRowPayload[]): LeaderboardViewRow[] {
  return rows.map((row, index) => ({
    rank: index + 1,
    teamId: row.team_id,
    teamName: row.team_name,
    challenge: row.challenge_points.decimal,
    royalties: row.royalty_points.decimal,
    total: row.coopetition_points.decimal,
  }));
}

/** Category filter over the catalog; "" keeps everything. */
export function filterModules(modules: ModulePayload[], category: string): ModulePayload[] {
  if (!category) {
    return modules;
  }
  return modules.filter((module) => module.category === category);
}

/** Distinct categories present in the catalog, in first-seen order. */
export function moduleCategories(modules: ModulePayload[]): string[] {
  const seen: string[] = [];
  for (const module of modules) {
    if (!seen.includes(module.category)) {
      seen.push(module.category);
    }
  }
  return seen;
}

export interface UploadFormState {
  disabled: boolean;
  banner: string | null;
}

/** Upload form shuts down once the marketplace freeze has happened. */
export function uploadForm(stats: StatsPayload): UploadFormState {
  if (!stats.marketplace.frozen) {
    return { disabled: false, banner: null };
  }
  const at = stats.marketplace.frozen_at ?? "the event start";
  return {
    disabled: true,
    banner: `Marketplace frozen since ${at}; new uploads closed until after the event.`,
  };
}

export interface RoyaltyFeedView {
  entries: {
    fromTeam: string;
    module: string;
    milestone: string;
    amount: string;
  }[];
  total: string;
}

export function royaltyFeed(payload: {
  entries: RoyaltyEntryPayload[];
  total: { decimal: string };
}): RoyaltyFeedView {
  return {
    entries: payload.entries.map((entry) => ({
      fromTeam: entry.user_team_id,
      module: entry.module_id,
      milestone: `${entry.task_id} / ${entry.milestone_id}`,
      amount: entry.amount.decimal,
    })),
    total: payload.total.decimal,
  };
}

/** q slider values move in 0.1 steps across [0, 10]. */
export function clampSubjectiveScore(raw: number): number {
  const stepped = Math.round(raw * 10) / 10;
  return Math.min(10, Math.max(0, stepped));
}
