/** Wire types mirroring the conduct service's JSON bodies. */

export type Dc = [number, number];

export interface Assignment {
  dc: Dc;
  size: number;
}

export interface PrunedEntry {
  dc: Dc;
  rule: string;
  cause: Dc;
}

export interface SelectionTrace {
  stage: string;
  seq?: number;
  decisions?: { dc: Dc; n: number; y: number; decision: string }[];
  built?: Dc[];
  pruned?: PrunedEntry[];
  rule_5a_removed?: Dc[];
  admissible_used?: Dc[] | null;
  final_candidates?: Dc[];
  utilities?: { dc: Dc; utility: number }[];
  selected?: Dc[];
  starting?: boolean;
}

export interface Recommendation {
  stage: string;
  stop_reason: string | null;
  recommendation: Assignment[] | null;
  eliminated: Dc[];
  enrolled: number;
  admissible?: Dc[];
  last_step: SelectionTrace | null;
}

export interface TrialConfigDoc {
  dosage_a: number[];
  dosage_b: number[];
  [key: string]: unknown;
}

export interface Snapshot {
  config: TrialConfigDoc;
  stage: string;
  seq: number;
  enrolled: number;
  n: number[][];
  y: number[][];
  currents: Dc[];
  eliminated: Dc[];
  pending: Assignment[] | null;
  stop_reason: string | null;
  need_combo_start: boolean;
  tracks: Record<string, unknown>;
}

export interface TrialResultView {
  mtdc: Dc | Dc[] | null;
  stopped_early: boolean;
  stop_reason: string | null;
  estimates: number[][] | null;
}

export interface TrialEvent {
  event: string;
  seq?: number;
  [key: string]: unknown;
}

export interface StateView {
  trial_id: string;
  snapshot: Snapshot;
  terminal: boolean;
  recommendation: Recommendation;
  result: TrialResultView | null;
}

export interface SubmitResponse extends StateView {
  duplicate: boolean;
  events: TrialEvent[];
}

export interface FinalizeResponse {
  trial_id: string;
  provisional: boolean;
  result: TrialResultView;
}

export function dcKey(dc: Dc): string {
  return `${dc[0]},${dc[1]}`;
}

export function dcLabel(dc: Dc): string {
  return `(${dc[0]},${dc[1]})`;
}

export function sameDc(a: Dc, b: Dc): boolean {
  return a[0] === b[0] && a[1] === b[1];
}
