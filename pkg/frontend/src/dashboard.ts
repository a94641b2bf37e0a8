/** Trial dashboard: grid + outcome form + decision trace + finalize view.
 *
 * The dashboard renders service responses verbatim and re-fetches after
 * every mutation; no dosing logic lives client-side.
 */

import { ApiClient, ApiError } from "./api.js";
import { renderBanner } from "./banner.js";
import { renderOutcomeForm } from "./forms.js";
import { renderGrid } from "./grid.js";
import { renderTrace } from "./trace.js";
import {
  dcLabel,
  type Dc,
  type StateView,
  type TrialEvent,
} from "./types.js";

export class Dashboard {
  private view: StateView | null = null;
  private trace: TrialEvent[] = [];
  readonly panels: {
    banner: HTMLElement;
    grid: HTMLElement;
    form: HTMLElement;
    trace: HTMLElement;
    finalize: HTMLElement;
    error: HTMLElement;
  };

  constructor(
    root: HTMLElement,
    private readonly api: ApiClient,
  ) {
    root.replaceChildren();
    const make = (cls: string) => {
      const el = document.createElement("section");
      el.className = cls;
      root.appendChild(el);
      return el;
    };
    this.panels = {
      error: make("panel error-panel"),
      banner: make("panel banner-panel"),
      grid: make("panel grid-panel"),
      form: make("panel form-panel"),
      finalize: make("panel finalize-panel"),
      trace: make("panel trace-panel"),
    };
  }

  get trialId(): string | null {
    return this.view?.trial_id ?? null;
  }

  get state(): StateView | null {
    return this.view;
  }

  async create(config: Record<string, unknown>): Promise<void> {
    this.trace = [];
    this.apply(await this.api.createTrial(config));
  }

  async load(trialId: string): Promise<void> {
    const view = await this.api.getState(trialId);
    const log = await this.api.events(trialId);
    this.trace = log
      .trim()
      .split("\n")
      .filter(Boolean)
      .map((line) => JSON.parse(line) as TrialEvent);
    this.apply(view);
  }

  async submitOutcomes(
    outcomes: { dc: Dc; n: number; y: number }[],
  ): Promise<void> {
    if (!this.view) throw new Error("no trial loaded");
    const seq = this.view.snapshot.seq;
    try {
      const response = await this.api.submitOutcomes(this.view.trial_id, seq, outcomes);
      this.trace.push(...response.events);
      this.apply(response);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // Stale form (another submission landed first): re-fetch and retry
        // entry against the fresh state.
        await this.load(this.view.trial_id);
        this.showError(`submission conflict: ${err.detail}; state refreshed`);
        return;
      }
      throw err;
    }
  }

  async finalize(force = false): Promise<void> {
    if (!this.view) throw new Error("no trial loaded");
    const report = await this.api.finalize(this.view.trial_id, force);
    const view = await this.api.getState(this.view.trial_id);
    // A provisional report is display-only state layered onto the live view.
    view.result = report.result;
    this.apply(view, report.provisional);
  }

  private showError(message: string): void {
    this.panels.error.textContent = message;
  }

  private apply(view: StateView, provisional = false): void {
    this.view = view;
    this.panels.error.textContent = "";
    renderBanner(this.panels.banner, view);
    renderGrid(this.panels.grid, view);
    renderOutcomeForm(this.panels.form, view.snapshot.pending, (outcomes) => {
      void this.submitOutcomes(outcomes);
    });
    renderTrace(this.panels.trace, this.trace);
    this.renderFinalize(view, provisional);
  }

  private renderFinalize(view: StateView, provisional: boolean): void {
    const panel = this.panels.finalize;
    panel.replaceChildren();
    const result = view.result;
    if (!result) {
      if (!view.terminal) {
        const button = document.createElement("button");
        button.textContent = "Provisional MTDC report";
        button.className = "finalize-button";
        button.addEventListener("click", () => void this.finalize(true));
        panel.appendChild(button);
      }
      return;
    }
    const header = document.createElement("h3");
    header.textContent = provisional ? "Provisional MTDC report" : "MTDC report";
    panel.appendChild(header);
    const line = document.createElement("p");
    line.className = "mtdc-line";
    if (result.mtdc === null) {
      line.textContent = result.stopped_early
        ? `No MTDC (trial stopped by ${result.stop_reason})`
        : "No MTDC (no eligible dose combination)";
    } else if (Array.isArray(result.mtdc[0])) {
      line.textContent = `MTDCs: ${(result.mtdc as Dc[]).map(dcLabel).join(", ")}`;
    } else {
      line.textContent = `MTDC: ${dcLabel(result.mtdc as Dc)}`;
    }
    panel.appendChild(line);
    if (result.estimates) {
      const caption = document.createElement("p");
      caption.textContent = "Fitted toxicity surface (monotone estimates):";
      panel.appendChild(caption);
      const table = document.createElement("table");
      table.className = "estimates";
      for (const row of result.estimates) {
        const tr = table.insertRow();
        for (const value of row) {
          const td = tr.insertCell();
          td.textContent = value.toFixed(4);
        }
      }
      panel.appendChild(table);
    }
  }
}
