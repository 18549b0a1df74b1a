/** Pure view logic: draft totals, ratio bars, priorities, re-ranking.
 *
 * Everything here is side-effect free so it can be unit tested without a
 * DOM; ui.ts only turns these view models into elements.
 */

import {
  CatalogProduct,
  GHG_OBJECTIVE_INDEX,
  RATIO_FEATURES,
  Recommendation,
} from "./types.js";

export type Draft = Map<string, number>;

export interface DraftTotals {
  cost: number;
  ghg: number;
  water: number;
  energy: number;
}

export function draftTotals(
  draft: Draft,
  products: Map<string, CatalogProduct>
): DraftTotals {
  const totals = { cost: 0, ghg: 0, water: 0, energy: 0 };
  for (const [pid, qty] of draft) {
    const p = products.get(pid);
    if (!p || qty <= 0) continue;
    totals.cost += p.price_usd * qty;
    totals.ghg += p.ghg_kgco2e * qty;
    totals.water += p.water_l * qty;
    totals.energy += p.energy_kcal * qty;
  }
  return totals;
}

export function setQuantity(draft: Draft, pid: string, qty: number): Draft {
  const next = new Map(draft);
  const clamped = Math.max(0, Math.round(qty));
  if (clamped === 0) next.delete(pid);
  else next.set(pid, clamped);
  return next;
}

export interface RatioBar {
  feature: string;
  ratio: number;
  /** bar width in percent, ratio 0.7 -> 70, capped at 200 for display */
  percent: number;
  /** e.g. "-30%" for ratio 0.7, "+13%" for 1.13 */
  label: string;
  improves: boolean;
}

export function ratioBar(feature: string, ratio: number): RatioBar {
  const percent = Math.min(Math.round(ratio * 100), 200);
  const delta = Math.round((ratio - 1) * 100);
  const label = `${delta >= 0 ? "+" : "−"}${Math.abs(delta)}%`;
  return { feature, ratio, percent, label, improves: ratio < 1 };
}

export interface BasketDiffEntry {
  product_id: string;
  delta: number;
}

export function diffAgainstDraft(
  rec: Recommendation,
  draft: Draft
): BasketDiffEntry[] {
  const pids = new Set([...Object.keys(rec.basket), ...draft.keys()]);
  const out: BasketDiffEntry[] = [];
  for (const pid of [...pids].sort()) {
    const delta = (rec.basket[pid] ?? 0) - (draft.get(pid) ?? 0);
    if (delta !== 0) out.push({ product_id: pid, delta });
  }
  return out;
}

export interface RecommendationView {
  index: number; // position in the server response
  cosine: number;
  passedFilter: boolean;
  bars: RatioBar[];
  diff: BasketDiffEntry[];
  basket: Record<string, number>;
}

export function recommendationView(
  rec: Recommendation,
  index: number,
  draft: Draft
): RecommendationView {
  return {
    index,
    cosine: rec.cosine_similarity,
    passedFilter: rec.passed_filter,
    bars: RATIO_FEATURES.map((f) => ratioBar(f, rec.ratios[f])),
    diff: diffAgainstDraft(rec, draft),
    basket: rec.basket,
  };
}

/** Priority sliders: position in 0..100, 50 is neutral weight 1.
 *
 * The mapping is exponential so each 10 points multiplies the weight by e;
 * the extreme position pins the weight high enough that the objective
 * dominates any client-side ranking.
 */
export const SLIDER_NEUTRAL = 50;
export const SLIDER_MAX = 100;
const DOMINANT_WEIGHT = 1e9;

export function sliderToWeight(position: number): number {
  if (position >= SLIDER_MAX) return DOMINANT_WEIGHT;
  return Math.exp((position - SLIDER_NEUTRAL) / 10);
}

/** Weights sent to the server must stay positive and finite. */
export function serverWeights(positions: number[]): number[] {
  return positions.map((p) =>
    Math.min(Math.max(sliderToWeight(p), 1e-2), 1e3)
  );
}

export function weightedScore(rec: Recommendation, weights: number[]): number {
  let score = 0;
  for (let j = 0; j < rec.losses.length; j++) {
    score += (weights[j] ?? 1) * rec.losses[j];
  }
  return score;
}

/**
 * Client-side re-ranking by weighted displayed losses. The sort is stable,
 * so equal weights preserve the server order exactly.
 */
export function rankRecommendations(
  recs: Recommendation[],
  weights: number[]
): number[] {
  const scored = recs.map((rec, i) => ({ i, score: weightedScore(rec, weights) }));
  scored.sort((a, b) => a.score - b.score || a.i - b.i);
  return scored.map((s) => s.i);
}

export function allNeutral(positions: number[]): boolean {
  return positions.every((p) => p === SLIDER_NEUTRAL);
}

export { GHG_OBJECTIVE_INDEX };
