import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import {
  allNeutral,
  diffAgainstDraft,
  draftTotals,
  rankRecommendations,
  ratioBar,
  setQuantity,
  sliderToWeight,
  weightedScore,
  SLIDER_NEUTRAL,
} from "../src/model.js";
import { CatalogProduct, CatalogResponse, Recommendation } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const catalogFixture = JSON.parse(
  readFileSync(join(here, "fixtures/catalog_response.json"), "utf-8")
) as CatalogResponse;
const jobFixture = JSON.parse(
  readFileSync(join(here, "fixtures/optimize_response.json"), "utf-8")
) as { recommendations: Recommendation[] };

const products = new Map<string, CatalogProduct>(
  catalogFixture.products.map((p) => [p.product_id, p])
);

describe("ratioBar", () => {
  it("maps a 0.7 ratio to a 70% bar labelled -30%", () => {
    const bar = ratioBar("ghg_kgco2e", 0.7);
    expect(bar.percent).toBe(70);
    expect(bar.label).toBe("−30%");
    expect(bar.improves).toBe(true);
  });

  it("labels ratios above one as increases", () => {
    const bar = ratioBar("price_usd", 1.13);
    expect(bar.percent).toBe(113);
    expect(bar.label).toBe("+13%");
    expect(bar.improves).toBe(false);
  });

  it("caps display width", () => {
    expect(ratioBar("water_l", 3.5).percent).toBe(200);
  });
});

describe("draft editing", () => {
  it("recomputes totals on every edit", () => {
    const pid = catalogFixture.products[0].product_id;
    const p = products.get(pid)!;
    let draft = new Map<string, number>();
    expect(draftTotals(draft, products).cost).toBe(0);
    draft = setQuantity(draft, pid, 2);
    const totals = draftTotals(draft, products);
    expect(totals.cost).toBeCloseTo(2 * p.price_usd, 10);
    expect(totals.ghg).toBeCloseTo(2 * p.ghg_kgco2e, 10);
    draft = setQuantity(draft, pid, 0);
    expect(draftTotals(draft, products).cost).toBe(0);
    expect(draft.has(pid)).toBe(false);
  });

  it("clamps negative and fractional quantities", () => {
    let draft = new Map<string, number>();
    draft = setQuantity(draft, "x", -3);
    expect(draft.has("x")).toBe(false);
    draft = setQuantity(draft, "x", 2.6);
    expect(draft.get("x")).toBe(3);
  });

  it("diffs a recommendation against the draft", () => {
    const draft = new Map([
      ["a", 2],
      ["b", 1],
    ]);
    const rec = {
      basket: { a: 1, c: 3 },
      losses: [],
      ratios: {},
      cosine_similarity: 1,
      passed_filter: true,
    } as unknown as Recommendation;
    expect(diffAgainstDraft(rec, draft)).toEqual([
      { product_id: "a", delta: -1 },
      { product_id: "b", delta: -1 },
      { product_id: "c", delta: 3 },
    ]);
  });
});

describe("priority sliders", () => {
  it("is neutral at the middle position", () => {
    expect(sliderToWeight(SLIDER_NEUTRAL)).toBe(1);
    expect(allNeutral(new Array(11).fill(SLIDER_NEUTRAL))).toBe(true);
  });

  it("grows monotonically", () => {
    expect(sliderToWeight(60)).toBeGreaterThan(sliderToWeight(50));
    expect(sliderToWeight(40)).toBeLessThan(1);
    expect(sliderToWeight(100)).toBeGreaterThan(1e6);
  });
});

describe("client-side re-ranking", () => {
  const recs = jobFixture.recommendations;

  it("preserves server order under equal weights", () => {
    const order = rankRecommendations(recs, new Array(11).fill(1));
    const scores = recs.map((r) => weightedScore(r, new Array(11).fill(1)));
    const sortedScores = [...scores].sort((a, b) => a - b);
    expect(order.map((i) => scores[i])).toEqual(sortedScores);
    // ties (if any) keep ascending original index: check stability property
    for (let k = 1; k < order.length; k++) {
      const prev = scores[order[k - 1]];
      const cur = scores[order[k]];
      if (prev === cur) expect(order[k - 1]).toBeLessThan(order[k]);
    }
  });

  it("matches an independent weighted-sum recomputation", () => {
    const weights = [2, 0.5, 1, 1, 1, 3, 1, 1, 0.25, 1, 1];
    const order = rankRecommendations(recs, weights);
    const oracle = recs
      .map((r, i) => ({
        i,
        score: r.losses.reduce((acc, loss, j) => acc + weights[j] * loss, 0),
      }))
      .sort((a, b) => a.score - b.score || a.i - b.i)
      .map((s) => s.i);
    expect(order).toEqual(oracle);
  });
});
