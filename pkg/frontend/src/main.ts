// Entry point: a token bar plus three tabs (dashboard, team, referee).
// Each tab owns its slice of the page and talks to the same ApiClient.

import { ApiClient } from "./api.js";
import { Dashboard } from "./dashboard.js";
import { el } from "./dom.js";
import { RefereeConsole } from "./referee.js";
import { TeamConsole } from "./team.js";

interface View {
  mount(): void;
  unmount(): void;
}

export function boot(root: HTMLElement): void {
  const client = new ApiClient("", null);
  const stage = el("main", { class: "stage" });
  let current: View | null = null;

  const tokenInput = el("input", {
    type: "password",
    name: "token",
    placeholder: "access token",
  });
  const teamInput = el("input", { name: "team", placeholder: "team id (team tab)" });
  const show = (view: View) => {
    current?.unmount();
    current = view;
    view.mount();
  };
  const tabs = el("nav", { class: "tabs" }, [
    el("button", {
      type: "button",
      text: "Dashboard",
      onclick: () => show(new Dashboard(stage, client)),
    }),
    el("button", {
      type: "button",
      text: "Team",
      onclick: () => show(new TeamConsole(stage, client, teamInput.value.trim())),
    }),
    el("button", {
      type: "button",
      text: "Referee",
      onclick: () => show(new RefereeConsole(stage, client)),
    }),
  ]);
  tokenInput.addEventListener("change", () => {
    client.token = tokenInput.value.trim() || null;
  });

  root.append(
    el("header", {}, [
      el("h1", { text: "Coopetition console" }),
      el("label", {}, ["Token ", tokenInput]),
      el("label", {}, ["Team ", teamInput]),
      tabs,
    ]),
    stage,
  );
  show(new Dashboard(stage, client));
}

const root = document.getElementById("app");
if (root) {
  boot(root);
}
