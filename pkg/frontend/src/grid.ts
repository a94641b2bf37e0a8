/** Dose-grid heatmap: drug A levels as rows, drug B levels as columns.
 *
 * Every visual state comes straight from the service response: current DCs
 * (pending assignment), surviving candidates, eliminated DCs, and the final
 * MTDC. Level-0 row/column hold the single-agent margins.
 */

import {
  dcKey,
  type Dc,
  type StateView,
} from "./types.js";

function keySet(dcs: Dc[] | undefined): Set<string> {
  return new Set((dcs ?? []).map(dcKey));
}

function mtdcSet(view: StateView): Set<string> {
  const mtdc = view.result?.mtdc ?? null;
  if (mtdc === null) return new Set();
  if (Array.isArray(mtdc[0])) return keySet(mtdc as Dc[]);
  return new Set([dcKey(mtdc as Dc)]);
}

export function renderGrid(el: HTMLElement, view: StateView): void {
  const snap = view.snapshot;
  const levelsA = snap.config.dosage_a.length;
  const levelsB = snap.config.dosage_b.length;
  const currents = keySet(snap.currents);
  const pendingDcs = keySet((snap.pending ?? []).map((a) => a.dc));
  const candidates = keySet(view.recommendation.last_step?.final_candidates);
  const admissible = keySet(view.recommendation.admissible);
  const eliminated = keySet(snap.eliminated);
  const mtdc = mtdcSet(view);
  const estimates = view.result?.estimates ?? null;

  const table = document.createElement("table");
  table.className = "dose-grid";
  const head = table.createTHead().insertRow();
  head.appendChild(document.createElement("th"));
  const corner = document.createElement("th");
  corner.textContent = "B0";
  corner.className = "margin-head";
  head.appendChild(corner);
  for (let j = 1; j <= levelsB; j++) {
    const th = document.createElement("th");
    th.textContent = `B${j}`;
    head.appendChild(th);
  }
  const body = table.createTBody();
  // Row 0: drug B alone.
  const marginRow = body.insertRow();
  const mh = document.createElement("th");
  mh.textContent = "A0";
  mh.className = "margin-head";
  marginRow.appendChild(mh);
  marginRow.appendChild(document.createElement("td")); // (0,0) never dosed
  for (let j = 1; j <= levelsB; j++) {
    marginRow.appendChild(cell(0, j));
  }
  for (let i = 1; i <= levelsA; i++) {
    const row = body.insertRow();
    const th = document.createElement("th");
    th.textContent = `A${i}`;
    row.appendChild(th);
    row.appendChild(cell(i, 0));
    for (let j = 1; j <= levelsB; j++) {
      row.appendChild(cell(i, j));
    }
  }
  el.replaceChildren(table);

  function cell(i: number, j: number): HTMLTableCellElement {
    const td = document.createElement("td");
    const key = `${i},${j}`;
    td.dataset.dc = key;
    const n = snap.n[i]?.[j] ?? 0;
    const y = snap.y[i]?.[j] ?? 0;
    td.textContent = n > 0 ? `${n},${y}` : "";
    const classes = ["cell"];
    if (i === 0 || j === 0) classes.push("margin");
    if (currents.has(key) || pendingDcs.has(key)) classes.push("current");
    if (candidates.has(key)) classes.push("candidate");
    if (admissible.has(key)) classes.push("admissible");
    if (eliminated.has(key)) classes.push("eliminated");
    if (mtdc.has(key)) classes.push("mtdc");
    td.className = classes.join(" ");
    if (estimates && i >= 1 && j >= 1) {
      const est = estimates[i - 1]?.[j - 1];
      if (est !== undefined) td.title = `fitted toxicity ${est.toFixed(4)}`;
    }
    return td;
  }
}
