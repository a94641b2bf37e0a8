/** Safety and status banners. */

import type { StateView } from "./types.js";

export function renderBanner(el: HTMLElement, view: StateView): void {
  el.replaceChildren();
  if (!view.terminal) {
    el.className = "banner live";
    el.textContent = `Stage ${view.snapshot.stage} — ${view.snapshot.enrolled} patients enrolled`;
    return;
  }
  const result = view.result;
  if (result?.stopped_early) {
    el.className = "banner stopped";
    el.textContent =
      result.stop_reason === "SR1"
        ? "Trial stopped (safety rule 1): lowest dose eliminated — no MTDC"
        : "Trial stopped (safety rule 2): admissible set empty — no MTDC";
    return;
  }
  el.className = "banner completed";
  el.textContent = "Trial completed — see the finalize panel for the MTDC report";
}
