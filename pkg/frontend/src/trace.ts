/** Decision-trace rendering: one human-readable line per derived event. */

import { dcLabel, type Dc, type TrialEvent } from "./types.js";

function listLabel(dcs: unknown): string {
  return (dcs as Dc[]).map(dcLabel).join(", ");
}

export function eventLine(ev: TrialEvent): string | null {
  switch (ev.event) {
    case "cohort_assigned": {
      const assignments = ev.assignments as { dc: Dc; size: number }[];
      const parts = assignments.map((a) => `${dcLabel(a.dc)} x${a.size}`);
      return `Cohort ${ev.seq} (stage ${ev.stage}): assigned ${parts.join(", ")}`;
    }
    case "outcomes_observed": {
      const outs = ev.outcomes as { dc: Dc; n: number; y: number }[];
      const parts = outs.map((o) => `${dcLabel(o.dc)}: ${o.y}/${o.n} DLT`);
      return `Cohort ${ev.seq}: observed ${parts.join(", ")}`;
    }
    case "decision_computed":
      return `Decision at ${dcLabel(ev.dc as Dc)} with ${ev.y}/${ev.n}: ${ev.decision}`;
    case "omega_built":
      return `Rule 3: candidates ${listLabel(ev.candidates)}`;
    case "omega_pruned":
      return `Rule ${ev.rule} eliminated ${dcLabel(ev.dc as Dc)} (dominated by ${dcLabel(ev.cause as Dc)})`;
    case "rule_5a_removed":
      return `Rule 5.a removed current ${dcLabel(ev.dc as Dc)}`;
    case "admissible_used":
      return `Rule 5.b: admissible set ${listLabel(ev.admissible)}`;
    case "dcs_selected":
      return ev.stage === "III"
        ? `Model-based selection: ${listLabel(ev.selected)}`
        : `Rule 6: selected ${listLabel(ev.selected)}`;
    case "sr1_eliminated":
      return `Safety rule 1 eliminated ${listLabel(ev.dcs)} (triggered at ${dcLabel(ev.cause as Dc)})`;
    case "monitor_evaluated":
      return `Monitoring model: ${ev.triggered ? "triggered" : "not triggered"}`;
    case "stage_transition":
      return `Stage ${ev.frm} -> ${ev.to}`;
    case "trial_stopped":
      return `Trial stopped (${ev.reason}): ${ev.detail}`;
    case "trial_completed":
      return `Trial completed with ${ev.enrolled} patients`;
    case "mtdc_selected": {
      const mtdc = ev.mtdc as Dc | Dc[] | null;
      if (mtdc === null) return "No MTDC selected";
      const label = Array.isArray(mtdc[0])
        ? (mtdc as Dc[]).map(dcLabel).join(", ")
        : dcLabel(mtdc as Dc);
      return `MTDC selected: ${label}`;
    }
    default:
      return null;
  }
}

export function renderTrace(el: HTMLElement, events: TrialEvent[]): void {
  el.replaceChildren();
  const list = document.createElement("ol");
  list.className = "trace";
  for (const ev of events) {
    const line = eventLine(ev);
    if (line === null) continue;
    const item = document.createElement("li");
    item.dataset.event = ev.event;
    item.textContent = line;
    list.appendChild(item);
  }
  el.appendChild(list);
}
