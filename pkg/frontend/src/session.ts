/** Client session: one draft basket, one in-flight job, a decision log.
 *
 * The decision loop: edit draft -> submit -> poll -> review ranked
 * recommendations -> accept one (it becomes the new draft) or decline all;
 * both decisions are posted to the feedback endpoint exactly once.
 */

import { GatewayClient } from "./api.js";
import {
  Draft,
  RecommendationView,
  allNeutral,
  rankRecommendations,
  recommendationView,
  serverWeights,
  sliderToWeight,
  SLIDER_NEUTRAL,
} from "./model.js";
import { JobResponse, Recommendation } from "./types.js";

export type Phase = "editing" | "working" | "reviewing" | "failed";

export class Session {
  phase: Phase = "editing";
  draft: Draft = new Map();
  positions: number[] = new Array(11).fill(SLIDER_NEUTRAL);
  method = "rnsga2";
  seed = 0;
  lastError: string | null = null;
  job: JobResponse | null = null;
  decisions: { jobId: string; choice: number | null }[] = [];
  private submittedDraft: Draft = new Map();

  constructor(private client: GatewayClient) {}

  get recommendations(): Recommendation[] {
    return this.job?.recommendations ?? [];
  }

  canSubmit(): boolean {
    return this.phase !== "working" && this.draft.size > 0;
  }

  async submit(budget?: number): Promise<void> {
    if (this.draft.size === 0) {
      throw new Error("intended basket is empty");
    }
    this.phase = "working";
    this.lastError = null;
    try {
      const payload = {
        basket: Object.fromEntries(this.draft),
        method: this.method,
        seed: this.seed,
        budget,
        weights: allNeutral(this.positions)
          ? undefined
          : serverWeights(this.positions),
      };
      const { job_id } = await this.client.submitBasket(payload);
      const job = await this.client.waitForJob(job_id);
      if (job.status === "failed") {
        throw new Error(job.error ?? "optimization failed");
      }
      this.job = job;
      this.submittedDraft = new Map(this.draft);
      this.phase = "reviewing";
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      this.phase = "failed";
      throw err;
    }
  }

  /** Recommendation views in the order implied by the current sliders.
   *  Neutral sliders defer to the server order; moving any slider re-sorts
   *  by the weighted sum of displayed losses (stable, ties keep server
   *  order). Re-ranking is presentation only. */
  views(): RecommendationView[] {
    const recs = this.recommendations;
    const order = allNeutral(this.positions)
      ? recs.map((_, i) => i)
      : rankRecommendations(recs, this.positions.map(sliderToWeight));
    return order.map((i) => recommendationView(recs[i], i, this.submittedDraft));
  }

  /** Accept by original (server) index; the basket becomes the new draft. */
  async accept(originalIndex: number): Promise<void> {
    const job = this.job;
    if (!job || job.status !== "completed") {
      throw new Error("no completed job to accept from");
    }
    await this.client.sendFeedback(job.job_id, originalIndex);
    this.decisions.push({ jobId: job.job_id, choice: originalIndex });
    const accepted = this.recommendations[originalIndex];
    this.draft = new Map(Object.entries(accepted.basket));
    this.job = null;
    this.phase = "editing";
  }

  /** Decline every recommendation; logged server-side as a null choice. */
  async declineAll(): Promise<void> {
    const job = this.job;
    if (!job || job.status !== "completed") {
      throw new Error("no completed job to decline");
    }
    await this.client.sendFeedback(job.job_id, null);
    this.decisions.push({ jobId: job.job_id, choice: null });
    this.job = null;
    this.phase = "editing";
  }

  acceptanceCount(): number {
    return this.decisions.filter((d) => d.choice !== null).length;
  }
}
