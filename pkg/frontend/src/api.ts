/** Thin typed client for the conduct service; all trial logic stays server-side. */

import type { FinalizeResponse, StateView, SubmitResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        detail = JSON.parse(text).detail ?? text;
      } catch {
        // non-JSON error body; keep raw text
      }
      throw new ApiError(response.status, String(detail));
    }
    return JSON.parse(text) as T;
  }

  createTrial(config: Record<string, unknown>): Promise<StateView> {
    return this.request("/trials", { method: "POST", body: JSON.stringify(config) });
  }

  getState(trialId: string): Promise<StateView> {
    return this.request(`/trials/${trialId}`);
  }

  submitOutcomes(
    trialId: string,
    seq: number,
    outcomes: { dc: [number, number]; n: number; y: number }[],
  ): Promise<SubmitResponse> {
    return this.request(`/trials/${trialId}/outcomes`, {
      method: "POST",
      body: JSON.stringify({ seq, outcomes }),
    });
  }

  finalize(trialId: string, force = false): Promise<FinalizeResponse> {
    return this.request(`/trials/${trialId}/finalize`, {
      method: "POST",
      body: JSON.stringify(force ? { force: true } : {}),
    });
  }

  events(trialId: string): Promise<string> {
    return this.fetchFn(`${this.baseUrl}/trials/${trialId}/events`).then((r) => r.text());
  }
}
