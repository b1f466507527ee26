// Public dashboard: league leaderboards on an auto-refresh cycle and the
// technology-transfer graph with a before/after-event toggle. Rows appear
// in the exact order the server returned them.

import { ApiClient, describeError } from "./api.js";
import { clear, el, svgEl } from "./dom.js";
import { componentCount, edgeColor, forceLayout, nodeRadii } from "./graphlayout.js";
import type { GraphPayload } from "./types.js";
import { leaderboardView } from "./viewmodels.js";

const REFRESH_MS = 5000;
const GRAPH_WIDTH = 720;
const GRAPH_HEIGHT = 480;

export class Dashboard {
  private timer: ReturnType<typeof setInterval> | null = null;
  private phase: "pre_event" | "post_event" = "post_event";

  private leagueSelect = el("select", { name: "league" });
  private leaderboardBody = el("tbody");
  private graphSvg = svgEl("svg", {
    viewBox: `0 0 ${GRAPH_WIDTH} ${GRAPH_HEIGHT}`,
    width: String(GRAPH_WIDTH),
    height: String(GRAPH_HEIGHT),
  }) as SVGSVGElement;
  private graphCaption = el("p", { class: "graph-caption" });
  private errorEl = el("p", { class: "error", role: "alert", hidden: true });

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
    private leagues: string[] = ["IRL", "SRL", "ORL"],
  ) {}

  mount(): void {
    clear(this.root);
    for (const league of this.leagues) {
      this.leagueSelect.append(el("option", { value: league, text: league }));
    }
    const preToggle = el("input", { type: "radio", name: "phase", value: "pre_event" });
    const postToggle = el("input", { type: "radio", name: "phase", value: "post_event", checked: true });
    preToggle.addEventListener("change", () => void this.setPhase("pre_event"));
    postToggle.addEventListener("change", () => void this.setPhase("post_event"));
    this.root.append(
      el("section", { class: "card" }, [
        el("h2", { text: "Leaderboard" }),
        el("label", {}, ["League ", this.leagueSelect]),
        el("table", {}, [
          el("thead", {}, [
            el("tr", {}, [
              el("th", { text: "#" }),
              el("th", { text: "Team" }),
              el("th", { text: "Challenge" }),
              el("th", { text: "Royalties" }),
              el("th", { text: "Total" }),
            ]),
          ]),
          this.leaderboardBody,
        ]),
      ]),
      el("section", { class: "card" }, [
        el("h2", { text: "Technology transfer" }),
        el("label", {}, [preToggle, " before event"]),
        el("label", {}, [postToggle, " including event"]),
        this.graphSvg,
        this.graphCaption,
      ]),
      this.errorEl,
    );
    this.leagueSelect.addEventListener("change", () => void this.refreshLeaderboard());
    this.timer = setInterval(() => void this.refreshLeaderboard(), REFRESH_MS);
    void this.refreshLeaderboard();
    void this.refreshGraph();
  }

  unmount(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private async setPhase(phase: "pre_event" | "post_event"): Promise<void> {
    this.phase = phase;
    await this.refreshGraph();
  }

  private async refreshLeaderboard(): Promise<void> {
    try {
      const rows = await this.client.leaderboard(this.leagueSelect.value || this.leagues[0]);
      clear(this.leaderboardBody);
      for (const row of leaderboardView(rows)) {
        this.leaderboardBody.append(
          el("tr", {}, [
            el("td", { text: String(row.rank) }),
            el("td", { text: `${row.teamName} (${row.teamId})` }),
            el("td", { text: row.challenge }),
            el("td", { text: row.royalties }),
            el("td", { text: row.total }),
          ]),
        );
      }
      this.errorEl.hidden = true;
    } catch (err) {
      this.errorEl.hidden = false;
      this.errorEl.textContent = describeError(err);
    }
  }

  private async refreshGraph(): Promise<void> {
    try {
      const graph = await this.client.graph(this.phase);
      this.renderGraph(graph);
      this.errorEl.hidden = true;
    } catch (err) {
      this.errorEl.hidden = false;
      this.errorEl.textContent = describeError(err);
    }
  }

  private renderGraph(graph: GraphPayload): void {
    clear(this.graphSvg);
    const positions = forceLayout(graph, { width: GRAPH_WIDTH, height: GRAPH_HEIGHT });
    const radii = nodeRadii(graph);
    for (const edge of graph.edges) {
      const from = positions.get(edge.developer_team_id);
      const to = positions.get(edge.user_team_id);
      if (!from || !to) {
        continue;
      }
      const line = svgEl("line", {
        x1: String(from.x),
        y1: String(from.y),
        x2: String(to.x),
        y2: String(to.y),
        stroke: edgeColor(edge.category),
        "stroke-width": "2",
      });
      if (!edge.verified) {
        line.setAttribute("stroke-dasharray", "6 4");
      }
      line.append(svgEl("title"));
      line.querySelector("title")!.textContent =
        `${edge.module_id}: ${edge.developer_team_id} to ${edge.user_team_id}`;
      this.graphSvg.append(line);
    }
    for (const node of graph.nodes) {
      const position = positions.get(node.team_id);
      if (!position) {
        continue;
      }
      const group = svgEl("g");
      const circle = svgEl("circle", {
        cx: String(position.x),
        cy: String(position.y),
        r: String(radii.get(node.team_id) ?? 0),
        fill: "#e8eef7",
        stroke: "#2b3a55",
      });
      const label = svgEl("text", {
        x: String(position.x),
        y: String(position.y),
        "text-anchor": "middle",
        "dominant-baseline": "middle",
        "font-size": "10",
      });
      label.textContent = node.team_id;
      group.append(circle, label);
      this.graphSvg.append(group);
    }
    const components = componentCount(graph);
    const plural = components === 1 ? "component" : "components";
    this.graphCaption.textContent =
      `${graph.nodes.length} teams, ${graph.edges.length} integrations, ` +
      `${components} connected ${plural}.`;
  }
}
