/** Thin fetch client for the gateway with polling and backoff. */

import { CatalogResponse, JobResponse, OptimizePayload } from "./types.js";

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string }
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export interface PollOptions {
  intervalMs?: number;
  backoff?: number;
  maxIntervalMs?: number;
  timeoutMs?: number;
}

export class GatewayError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class GatewayClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
    private sleep: (ms: number) => Promise<void> = (ms) =>
      new Promise((resolve) => setTimeout(resolve, ms))
  ) {}

  private async request<T>(path: string, init?: Parameters<FetchLike>[1]): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    const body = (await response.json()) as T & { detail?: string };
    if (!response.ok) {
      throw new GatewayError(response.status, body.detail ?? `HTTP ${response.status}`);
    }
    return body;
  }

  getCatalog(): Promise<CatalogResponse> {
    return this.request("/catalog");
  }

  submitBasket(payload: OptimizePayload): Promise<{ job_id: string; status: string }> {
    return this.request("/optimize", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getJob(jobId: string): Promise<JobResponse> {
    return this.request(`/jobs/${jobId}`);
  }

  /** Poll until the job leaves pending, with exponential backoff. */
  async waitForJob(jobId: string, options: PollOptions = {}): Promise<JobResponse> {
    const {
      intervalMs = 250,
      backoff = 1.5,
      maxIntervalMs = 4000,
      timeoutMs = 180000,
    } = options;
    const deadline = Date.now() + timeoutMs;
    let wait = intervalMs;
    for (;;) {
      const job = await this.getJob(jobId);
      if (job.status !== "pending") return job;
      if (Date.now() + wait > deadline) {
        throw new GatewayError(408, "optimization timed out");
      }
      await this.sleep(wait);
      wait = Math.min(wait * backoff, maxIntervalMs);
    }
  }

  sendFeedback(jobId: string, acceptedIndex: number | null): Promise<{ status: string }> {
    return this.request(`/jobs/${jobId}/feedback`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ accepted_index: acceptedIndex }),
    });
  }
}
