// Team console: browse the module catalog, upload modules while the
// marketplace is open, declare integrations, and watch royalties come in.

import { ApiClient, describeError } from "./api.js";
import { clear, el } from "./dom.js";
import type { ModulePayload } from "./types.js";
import { filterModules, moduleCategories, royaltyFeed, uploadForm } from "./viewmodels.js";

export class TeamConsole {
  private modules: ModulePayload[] = [];

  private categorySelect = el("select", { name: "category" });
  private catalogBody = el("tbody");
  private uploadFieldset = el("fieldset", { class: "upload-fields" });
  private uploadBanner = el("p", { class: "banner", hidden: true });
  private royaltyList = el("ul", { class: "royalty-feed" });
  private royaltyTotal = el("p", { class: "royalty-total", text: "Total: 0.00" });
  private errorEl = el("p", { class: "error", role: "alert", hidden: true });

  private uploadId = el("input", { name: "id", placeholder: "module id" });
  private uploadName = el("input", { name: "name", placeholder: "name" });
  private uploadCategory = el("input", { name: "category", placeholder: "category" });
  private uploadKind = el("input", { name: "kind", placeholder: "software or hardware" });
  private uploadCoDevs = el("input", { name: "co_developers", placeholder: "co-developer team ids" });
  private uploadDescription = el("input", { name: "description", placeholder: "description" });

  private declModule = el("input", { name: "module_id", placeholder: "module id" });
  private declLeague = el("input", { name: "league_id", placeholder: "league id" });
  private declTask = el("input", { name: "task_id", placeholder: "task id" });
  private declMilestone = el("input", { name: "milestone_id", placeholder: "milestone id" });

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
    private teamId: string,
  ) {}

  mount(): void {
    clear(this.root);
    this.root.append(
      el("section", { class: "card" }, [
        el("h2", { text: "Module catalog" }),
        el("label", {}, ["Category ", this.categorySelect]),
        el("button", { type: "button", text: "Refresh", onclick: () => void this.refresh() }),
        el("table", {}, [
          el("thead", {}, [
            el("tr", {}, [
              el("th", { text: "Module" }),
              el("th", { text: "Category" }),
              el("th", { text: "Developers" }),
              el("th", { text: "Royalty rate" }),
              el("th", { text: "Window" }),
            ]),
          ]),
          this.catalogBody,
        ]),
      ]),
      el("section", { class: "card" }, [
        el("h2", { text: "Upload module" }),
        this.uploadBanner,
        el("form", { onsubmit: (event) => this.upload(event) }, [this.uploadFieldset]),
      ]),
      el("section", { class: "card" }, [
        el("h2", { text: "Declare integration" }),
        el("form", { onsubmit: (event) => this.declare(event) }, [
          this.declModule,
          this.declLeague,
          this.declTask,
          this.declMilestone,
          el("button", { type: "submit", text: "Declare" }),
        ]),
      ]),
      el("section", { class: "card" }, [
        el("h2", { text: "Royalty feed" }),
        this.royaltyList,
        this.royaltyTotal,
      ]),
      this.errorEl,
    );
    this.uploadFieldset.append(
      el("label", {}, ["Id ", this.uploadId]),
      el("label", {}, ["Name ", this.uploadName]),
      el("label", {}, ["Category ", this.uploadCategory]),
      el("label", {}, ["Kind ", this.uploadKind]),
      el("label", {}, ["Co-developers ", this.uploadCoDevs]),
      el("label", {}, ["Description ", this.uploadDescription]),
      el("button", { type: "submit", text: "Upload" }),
    );
    this.categorySelect.addEventListener("change", () => this.renderCatalog());
    void this.refresh();
  }

  unmount(): void {}

  async refresh(): Promise<void> {
    this.clearError();
    try {
      const [modules, stats] = await Promise.all([this.client.modules(), this.client.stats()]);
      this.modules = modules;
      this.renderCategories();
      this.renderCatalog();
      const form = uploadForm(stats);
      this.uploadFieldset.disabled = form.disabled;
      this.uploadBanner.hidden = form.banner === null;
      this.uploadBanner.textContent = form.banner ?? "";
      await this.refreshRoyalties();
    } catch (err) {
      this.showError(err);
    }
  }

  private async refreshRoyalties(): Promise<void> {
    const feed = royaltyFeed(await this.client.royalties(this.teamId));
    clear(this.royaltyList);
    for (const entry of feed.entries) {
      this.royaltyList.append(
        el("li", {
          text: `${entry.amount} from ${entry.fromTeam} via ${entry.module} (${entry.milestone})`,
        }),
      );
    }
    this.royaltyTotal.textContent = `Total: ${feed.total}`;
  }

  private renderCategories(): void {
    const previous = this.categorySelect.value;
    clear(this.categorySelect);
    this.categorySelect.append(el("option", { value: "", text: "all" }));
    for (const category of moduleCategories(this.modules)) {
      this.categorySelect.append(el("option", { value: category, text: category }));
    }
    this.categorySelect.value = previous;
  }

  private renderCatalog(): void {
    clear(this.catalogBody);
    for (const module of filterModules(this.modules, this.categorySelect.value)) {
      this.catalogBody.append(
        el("tr", {}, [
          el("td", { text: `${module.name} (${module.id})` }),
          el("td", { text: module.category }),
          el("td", { text: module.developer_team_ids.join(", ") }),
          el("td", { text: module.royalty_rate ?? "-" }),
          el("td", { text: module.upload_window_id ?? "-" }),
        ]),
      );
    }
  }

  private showError(err: unknown): void {
    this.errorEl.hidden = false;
    this.errorEl.textContent = describeError(err);
  }

  private clearError(): void {
    this.errorEl.hidden = true;
    this.errorEl.textContent = "";
  }

  private async upload(event: Event): Promise<void> {
    event.preventDefault();
    this.clearError();
    const coDevelopers = this.uploadCoDevs.value
      .split(",")
      .map((part) => part.trim())
      .filter((part) => part.length > 0);
    try {
      await this.client.uploadModule({
        id: this.uploadId.value.trim(),
        name: this.uploadName.value.trim(),
        category: this.uploadCategory.value.trim(),
        kind: this.uploadKind.value.trim() || undefined,
        developer_team_ids: [this.teamId, ...coDevelopers],
        description: this.uploadDescription.value.trim() || undefined,
      });
      await this.refresh();
    } catch (err) {
      this.showError(err);
    }
  }

  private async declare(event: Event): Promise<void> {
    event.preventDefault();
    this.clearError();
    try {
      await this.client.declareIntegration({
        module_id: this.declModule.value.trim(),
        league_id: this.declLeague.value.trim(),
        task_id: this.declTask.value.trim(),
        milestone_id: this.declMilestone.value.trim(),
      });
      await this.refresh();
    } catch (err) {
      this.showError(err);
    }
  }
}
