/** Test scaffolding: canned state views and a real service child process. */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import type { StateView, TrialEvent } from "../src/types.js";

export function cannedView(partial?: Partial<StateView>): StateView {
  const base: StateView = {
    trial_id: "t0",
    snapshot: {
      config: { dosage_a: [1, 2, 3, 4], dosage_b: [1, 2, 3, 4, 5] },
      stage: "II",
      seq: 2,
      enrolled: 6,
      n: zeros(5, 6),
      y: zeros(5, 6),
      currents: [
        [1, 5],
        [2, 4],
      ],
      eliminated: [],
      pending: [
        { dc: [1, 5], size: 3 },
        { dc: [2, 4], size: 3 },
      ],
      stop_reason: null,
      need_combo_start: false,
      tracks: {},
    },
    terminal: false,
    recommendation: {
      stage: "II",
      stop_reason: null,
      recommendation: [
        { dc: [1, 5], size: 3 },
        { dc: [2, 4], size: 3 },
      ],
      eliminated: [],
      enrolled: 6,
      last_step: null,
    },
    result: null,
  };
  const view = structuredClone(base);
  Object.assign(view, partial);
  return view;
}

export function zeros(rows: number, cols: number): number[][] {
  return Array.from({ length: rows }, () => Array.from({ length: cols }, () => 0));
}

export const FIXTURE_PATH = join(
  __dirname,
  "..",
  "..",
  "src",
  "mci3p3",
  "fixtures",
  "figure3.jsonl",
);

export function loadFixtureEvents(): TrialEvent[] {
  return readFileSync(FIXTURE_PATH, "utf8")
    .trim()
    .split("\n")
    .map((line) => JSON.parse(line) as TrialEvent);
}

export interface ServiceHandle {
  baseUrl: string;
  stop: () => void;
}

/** Spawn the conduct service and wait until it answers. */
export async function startService(): Promise<ServiceHandle> {
  const port = 21000 + Math.floor(Math.random() * 20000);
  const dataDir = mkdtempSync(join(tmpdir(), "conduct-ui-"));
  const child: ChildProcess = spawn(
    "python3",
    ["-m", "mci3p3.cli", "serve", "--port", String(port), "--data-dir", dataDir],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  let stderr = "";
  child.stderr?.on("data", (chunk) => {
    stderr += String(chunk);
  });
  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 30000;
  for (;;) {
    try {
      const response = await fetch(`${baseUrl}/trials/probe`);
      if (response.status === 404) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      child.kill();
      throw new Error(`service did not come up on ${baseUrl}\n${stderr}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  return { baseUrl, stop: () => child.kill() };
}
