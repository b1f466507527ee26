// Thin fetch client for the competition service. Every response is an
// envelope with a schema_version; errors carry {type, detail} which we
// keep verbatim so referees see exactly what the server said.

import type {
  BreakdownPayload,
  CommandPayload,
  DeclarationPayload,
  GraphPayload,
  LeaderboardRowPayload,
  ModulePayload,
  OutcomeRequest,
  RoyaltyEntryPayload,
  SessionPayload,
  StatsPayload,
  TeamPayload,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly errorType: string,
    public readonly detail: string,
  ) {
    super(`${errorType}: ${detail}`);
    this.name = "ApiRequestError";
  }
}

/** Human-readable line for a failed call, keeping the server text verbatim. */
export function describeError(err: unknown): string {
  if (err instanceof ApiRequestError) {
    const prefix =
      err.status === 401 ? "Sign-in required" :
      err.status === 403 ? "Not allowed" :
      err.status === 404 ? "Not found" :
      err.status === 409 ? "Rejected" : "Request failed";
    return `${prefix} (${err.errorType}): ${err.detail}`;
  }
  return err instanceof Error ? err.message : String(err);
}

export class ApiClient {
  constructor(
    public baseUrl: string = "",
    public token: string | null = null,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
    }
    if (this.token) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    const response = await fetch(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => null);
    if (!response.ok) {
      const error = payload?.error ?? { type: "UnknownError", detail: `HTTP ${response.status}` };
      throw new ApiRequestError(response.status, error.type, error.detail);
    }
    return payload as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("GET", "/health");
  }

  async teams(): Promise<TeamPayload[]> {
    const body = await this.request<{ teams: TeamPayload[] }>("GET", "/teams");
    return body.teams;
  }

  async modules(category?: string): Promise<ModulePayload[]> {
    const query = category ? `?category=${encodeURIComponent(category)}` : "";
    const body = await this.request<{ modules: ModulePayload[] }>("GET", `/modules${query}`);
    return body.modules;
  }

  async uploadModule(module: {
    id: string;
    name: string;
    category: string;
    kind?: string;
    developer_team_ids: string[];
    description?: string;
  }): Promise<ModulePayload> {
    const body = await this.request<{ module: ModulePayload }>("POST", "/modules", module);
    return body.module;
  }

  async declareIntegration(declaration: {
    module_id: string;
    league_id: string;
    task_id: string;
    milestone_id: string;
    user_team_id?: string;
  }): Promise<DeclarationPayload> {
    const body = await this.request<{ declaration: DeclarationPayload }>(
      "POST",
      "/integrations",
      declaration,
    );
    return body.declaration;
  }

  async openAttempt(attempt: {
    team_id?: string;
    task_id: string;
    task_level: string;
  }): Promise<SessionPayload> {
    const body = await this.request<{ session: SessionPayload }>("POST", "/attempts", attempt);
    return body.session;
  }

  async recordOutcome(sessionId: string, outcome: OutcomeRequest): Promise<SessionPayload> {
    const body = await this.request<{ session: SessionPayload }>(
      "POST",
      `/attempts/${encodeURIComponent(sessionId)}/outcomes`,
      outcome,
    );
    return body.session;
  }

  async closeAttempt(sessionId: string): Promise<BreakdownPayload> {
    const body = await this.request<{ score: BreakdownPayload }>(
      "POST",
      `/attempts/${encodeURIComponent(sessionId)}/close`,
    );
    return body.score;
  }

  attemptScore(sessionId: string): Promise<{ score: BreakdownPayload; session: SessionPayload }> {
    return this.request("GET", `/attempts/${encodeURIComponent(sessionId)}/score`);
  }

  async leaderboard(leagueId: string): Promise<LeaderboardRowPayload[]> {
    const body = await this.request<{ rows: LeaderboardRowPayload[] }>(
      "GET",
      `/leaderboard/${encodeURIComponent(leagueId)}`,
    );
    return body.rows;
  }

  royalties(teamId: string): Promise<{
    team_id: string;
    entries: RoyaltyEntryPayload[];
    total: { decimal: string; numerator: number; denominator: number };
  }> {
    return this.request("GET", `/teams/${encodeURIComponent(teamId)}/royalties`);
  }

  async graph(phase: "pre_event" | "post_event"): Promise<GraphPayload> {
    const body = await this.request<{ graph: GraphPayload }>(
      "GET",
      `/graph?phase=${phase}&format=json`,
    );
    return body.graph;
  }

  async stats(): Promise<StatsPayload> {
    const body = await this.request<{ stats: StatsPayload }>("GET", "/stats");
    return body.stats;
  }

  async generateCommand(requestBody: {
    league_id: string;
    task_number?: number;
    base_kitchen?: string;
    pins?: Record<string, string>;
    seed?: number;
  }): Promise<CommandPayload> {
    const body = await this.request<{ command: CommandPayload }>(
      "POST",
      "/commands/generate",
      requestBody,
    );
    return body.command;
  }
}
