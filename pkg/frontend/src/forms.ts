/** Outcome entry for the pending cohorts: one DLT-count input per assigned DC. */

import { dcKey, dcLabel, type Assignment } from "./types.js";

export type OutcomeSubmit = (
  outcomes: { dc: [number, number]; n: number; y: number }[],
) => void;

export function renderOutcomeForm(
  el: HTMLElement,
  pending: Assignment[] | null,
  onSubmit: OutcomeSubmit,
): void {
  el.replaceChildren();
  if (!pending || pending.length === 0) {
    return;
  }
  const form = document.createElement("form");
  form.className = "outcome-form";
  for (const a of pending) {
    const row = document.createElement("label");
    row.className = "outcome-row";
    row.textContent = `DLTs at ${dcLabel(a.dc)} (cohort of ${a.size}): `;
    const input = document.createElement("input");
    input.type = "number";
    input.min = "0";
    input.max = String(a.size);
    input.value = "0";
    input.required = true;
    input.name = `dlt-${dcKey(a.dc)}`;
    input.dataset.dc = dcKey(a.dc);
    input.dataset.size = String(a.size);
    row.appendChild(input);
    form.appendChild(row);
  }
  const button = document.createElement("button");
  button.type = "submit";
  button.textContent = "Submit cohort outcomes";
  form.appendChild(button);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const outcomes = [...form.querySelectorAll("input")].map((input) => {
      const [i, j] = (input.dataset.dc ?? "0,0").split(",").map(Number);
      return {
        dc: [i, j] as [number, number],
        n: Number(input.dataset.size),
        y: Number(input.value),
      };
    });
    onSubmit(outcomes);
  });
  el.appendChild(form);
}
