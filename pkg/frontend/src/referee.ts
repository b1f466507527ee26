// Referee console: open an attempt, record milestone outcomes against the
// running clock, close the attempt and show the resulting breakdown. The
// clock here is advisory; the server holds the authoritative deadline.

import { ApiClient, describeError } from "./api.js";
import { clear, el } from "./dom.js";
import type { OutcomeRequest, SessionPayload } from "./types.js";
import {
  clampSubjectiveScore,
  countdown,
  milestoneChecklist,
  refereeControls,
  scoreView,
} from "./viewmodels.js";

const TICK_MS = 500;

export class RefereeConsole {
  private session: SessionPayload | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  private countdownEl = el("strong", { class: "countdown", text: "-" });
  private bannerEl = el("p", { class: "banner", hidden: true });
  private errorEl = el("p", { class: "error", role: "alert", hidden: true });
  private sessionInfoEl = el("p", { class: "session-info", text: "No attempt open." });
  private checklistEl = el("tbody");
  private scoreEl = el("div", { class: "score-panel" });

  private outcomeFieldset = el("fieldset", { class: "outcome-fields", disabled: true });
  private closeButton = el("button", { type: "button", text: "Close attempt", disabled: true });

  private teamInput = el("input", { name: "team_id", placeholder: "team id" });
  private taskInput = el("input", { name: "task_id", placeholder: "task id" });
  private levelInput = el("input", { name: "task_level", placeholder: "task level" });

  private milestoneInput = el("input", { name: "milestone_id", placeholder: "milestone id" });
  private successInput = el("input", { type: "checkbox", name: "success", checked: true });
  private outcomeLevelInput = el("input", { name: "level", placeholder: "condition level" });
  private scoreSlider = el("input", {
    type: "range",
    name: "subjective_score",
    min: "0",
    max: "10",
    step: "0.1",
    value: "5",
  });
  private scoreReadout = el("output", { text: "5.0" });
  private penaltiesInput = el("input", { name: "penalties", placeholder: "penalty ids, comma separated" });
  private modulesInput = el("input", { name: "external_module_ids", placeholder: "integrated module ids" });
  private subjectiveOnlyInput = el("input", { type: "checkbox", name: "subjective_only" });

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
  ) {}

  mount(): void {
    clear(this.root);
    this.root.append(
      el("section", { class: "card" }, [
        el("h2", { text: "Open attempt" }),
        el("form", { onsubmit: (event) => this.openAttempt(event) }, [
          this.teamInput,
          this.taskInput,
          this.levelInput,
          el("button", { type: "submit", text: "Start" }),
        ]),
      ]),
      el("section", { class: "card" }, [
        el("h2", {}, ["Attempt clock: ", this.countdownEl]),
        this.sessionInfoEl,
        this.bannerEl,
        el("form", { onsubmit: (event) => this.recordOutcome(event) }, [
          this.outcomeFieldset,
        ]),
        this.closeButton,
        this.errorEl,
      ]),
      el("section", { class: "card" }, [
        el("h2", { text: "Recorded milestones" }),
        el("table", {}, [
          el("thead", {}, [
            el("tr", {}, [
              el("th", { text: "Milestone" }),
              el("th", { text: "Outcome" }),
              el("th", { text: "Level" }),
              el("th", { text: "Subjective" }),
              el("th", { text: "Penalties" }),
              el("th", { text: "Transfers" }),
            ]),
          ]),
          this.checklistEl,
        ]),
      ]),
      el("section", { class: "card" }, [el("h2", { text: "Score" }), this.scoreEl]),
    );
    this.outcomeFieldset.append(
      el("label", {}, ["Milestone ", this.milestoneInput]),
      el("label", {}, [this.successInput, " Succeeded"]),
      el("label", {}, ["Level ", this.outcomeLevelInput]),
      el("label", {}, ["Subjective score ", this.scoreSlider, this.scoreReadout]),
      el("label", {}, ["Penalties ", this.penaltiesInput]),
      el("label", {}, ["Transferred modules ", this.modulesInput]),
      el("label", {}, [this.subjectiveOnlyInput, " Subjective score only"]),
      el("button", { type: "submit", text: "Record outcome" }),
    );
    this.scoreSlider.addEventListener("input", () => {
      const value = clampSubjectiveScore(Number(this.scoreSlider.value));
      this.scoreReadout.textContent = value.toFixed(1);
    });
    this.closeButton.addEventListener("click", () => void this.closeAttempt());
    this.timer = setInterval(() => this.tick(), TICK_MS);
  }

  unmount(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private tick(): void {
    if (!this.session) {
      return;
    }
    const now = Date.now();
    this.countdownEl.textContent = countdown(this.session.deadline, now).label;
    const controls = refereeControls(this.session, now);
    this.outcomeFieldset.disabled = controls.inputsDisabled;
    this.closeButton.disabled = !controls.canClose;
    this.bannerEl.hidden = controls.banner === null;
    this.bannerEl.textContent = controls.banner ?? "";
  }

  private setSession(session: SessionPayload): void {
    this.session = session;
    this.sessionInfoEl.textContent =
      `Attempt ${session.attempt_number} of ${session.team_id} on ${session.task_id}` +
      ` (level ${session.task_level}), deadline ${session.deadline}.`;
    clear(this.checklistEl);
    for (const row of milestoneChecklist(session)) {
      this.checklistEl.append(
        el("tr", {}, [
          el("td", { text: row.milestoneId }),
          el("td", { text: row.outcome }),
          el("td", { text: row.level }),
          el("td", { text: row.subjectiveScore }),
          el("td", { text: row.penalties }),
          el("td", { text: row.transferModules }),
        ]),
      );
    }
    this.tick();
  }

  private showError(err: unknown): void {
    this.errorEl.hidden = false;
    this.errorEl.textContent = describeError(err);
  }

  private clearError(): void {
    this.errorEl.hidden = true;
    this.errorEl.textContent = "";
  }

  private async openAttempt(event: Event): Promise<void> {
    event.preventDefault();
    this.clearError();
    try {
      const session = await this.client.openAttempt({
        team_id: this.teamInput.value.trim() || undefined,
        task_id: this.taskInput.value.trim(),
        task_level: this.levelInput.value.trim(),
      });
      clear(this.scoreEl);
      this.setSession(session);
    } catch (err) {
      this.showError(err);
    }
  }

  private async recordOutcome(event: Event): Promise<void> {
    event.preventDefault();
    if (!this.session) {
      return;
    }
    this.clearError();
    const split = (value: string) =>
      value.split(",").map((part) => part.trim()).filter((part) => part.length > 0);
    const outcome: OutcomeRequest = {
      milestone_id: this.milestoneInput.value.trim(),
      subjective_score: clampSubjectiveScore(Number(this.scoreSlider.value)),
    };
    if (!this.subjectiveOnlyInput.checked) {
      outcome.success = this.successInput.checked;
      const level = this.outcomeLevelInput.value.trim();
      if (level) {
        outcome.level = level;
      }
      outcome.penalties = split(this.penaltiesInput.value);
      outcome.external_module_ids = split(this.modulesInput.value);
    }
    try {
      const session = await this.client.recordOutcome(this.session.id, outcome);
      this.setSession(session);
    } catch (err) {
      this.showError(err);
    }
  }

  private async closeAttempt(): Promise<void> {
    if (!this.session) {
      return;
    }
    this.clearError();
    try {
      await this.client.closeAttempt(this.session.id);
      const { score, session } = await this.client.attemptScore(this.session.id);
      this.setSession(session);
      this.renderScore(score);
    } catch (err) {
      this.showError(err);
    }
  }

  private renderScore(payload: Parameters<typeof scoreView>[0]): void {
    const view = scoreView(payload);
    clear(this.scoreEl);
    this.scoreEl.append(
      el("p", {
        text:
          `Task ${view.taskId}, attempt ${view.attemptNumber}: ` +
          `${view.taskPoints} points (task factor ${view.taskFactor}).`,
      }),
      el("table", {}, [
        el("thead", {}, [
          el("tr", {}, [
            el("th", { text: "Milestone" }),
            el("th", { text: "Points" }),
            el("th", { text: "Retention" }),
            el("th", { text: "Contribution" }),
            el("th", { text: "Transfer" }),
          ]),
        ]),
        el(
          "tbody",
          {},
          view.rows.map((row) =>
            el("tr", {}, [
              el("td", { text: row.milestoneId }),
              el("td", { text: row.points }),
              el("td", { text: row.retention }),
              el("td", { text: row.contribution }),
              el("td", { text: row.transfer ? "yes" : "no" }),
            ]),
          ),
        ),
      ]),
    );
    if (view.royalties.length > 0) {
      this.scoreEl.append(
        el("h3", { text: "Royalties owed" }),
        el(
          "ul",
          {},
          view.royalties.map((entry) =>
            el("li", { text: `${entry.amount} to ${entry.developer} for ${entry.module}` }),
          ),
        ),
      );
    }
  }
}
