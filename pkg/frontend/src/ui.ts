/** DOM rendering; all state lives in the Session, views come from model.ts. */

import {
  DraftTotals,
  RecommendationView,
  SLIDER_MAX,
  draftTotals,
} from "./model.js";
import { Session } from "./session.js";
import { CatalogProduct, OBJECTIVE_GROUPS, OBJECTIVE_NAMES } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderTotals(totals: DraftTotals): HTMLElement {
  const box = el("div", "totals");
  box.append(
    el("span", "totals-item", `$${totals.cost.toFixed(2)}`),
    el("span", "totals-item", `${totals.ghg.toFixed(1)} kg CO2e`),
    el("span", "totals-item", `${totals.water.toFixed(0)} L water`),
    el("span", "totals-item", `${totals.energy.toFixed(0)} kCal`)
  );
  return box;
}

export function renderBasketEditor(
  session: Session,
  products: Map<string, CatalogProduct>,
  onChange: () => void
): HTMLElement {
  const container = el("section", "basket-editor");
  container.append(el("h2", undefined, "Intended basket"));
  container.append(renderTotals(draftTotals(session.draft, products)));

  const list = el("div", "basket-lines");
  for (const [pid, qty] of [...session.draft.entries()].sort()) {
    const product = products.get(pid);
    const line = el("div", "basket-line");
    line.append(el("span", "product-name", product ? product.name : pid));

    const stepper = el("div", "stepper");
    const minus = el("button", "step", "−");
    minus.setAttribute("aria-label", `remove one ${pid}`);
    minus.addEventListener("click", () => {
      session.draft = new Map(session.draft);
      qty - 1 <= 0 ? session.draft.delete(pid) : session.draft.set(pid, qty - 1);
      onChange();
    });
    const count = el("span", "count", String(qty));
    const plus = el("button", "step", "+");
    plus.setAttribute("aria-label", `add one ${pid}`);
    plus.addEventListener("click", () => {
      session.draft = new Map(session.draft);
      session.draft.set(pid, qty + 1);
      onChange();
    });
    stepper.append(minus, count, plus);
    line.append(stepper);
    list.append(line);
  }
  container.append(list);

  const picker = el("div", "product-picker");
  const select = el("select");
  select.setAttribute("aria-label", "add product");
  for (const p of [...products.values()].sort((a, b) =>
    a.product_id.localeCompare(b.product_id)
  )) {
    const option = el("option", undefined, `${p.name} (${p.unit})`);
    option.value = p.product_id;
    select.append(option);
  }
  const add = el("button", "add-product", "Add to basket");
  add.addEventListener("click", () => {
    const pid = select.value;
    session.draft = new Map(session.draft);
    session.draft.set(pid, (session.draft.get(pid) ?? 0) + 1);
    onChange();
  });
  picker.append(select, add);
  container.append(picker);
  return container;
}

export function renderSliders(session: Session, onChange: () => void): HTMLElement {
  const container = el("section", "priorities");
  container.append(el("h2", undefined, "Priorities"));
  for (const group of OBJECTIVE_GROUPS) {
    const fieldset = el("fieldset", "priority-group");
    fieldset.append(el("legend", undefined, group.label));
    for (const j of group.indices) {
      const row = el("label", "slider-row");
      row.append(el("span", "slider-name", OBJECTIVE_NAMES[j]));
      const input = el("input");
      input.type = "range";
      input.min = "0";
      input.max = String(SLIDER_MAX);
      input.value = String(session.positions[j]);
      input.addEventListener("input", () => {
        session.positions[j] = Number(input.value);
        onChange();
      });
      row.append(input);
      fieldset.append(row);
    }
    container.append(fieldset);
  }
  return container;
}

export function renderRecommendation(
  view: RecommendationView,
  products: Map<string, CatalogProduct>,
  onAccept: (originalIndex: number) => void
): HTMLElement {
  const card = el("article", "recommendation");
  const head = el("header", "rec-head");
  head.append(el("span", "cosine", `similarity ${view.cosine.toFixed(2)}`));
  head.append(
    el(
      "span",
      view.passedFilter ? "badge badge-ok" : "badge badge-out",
      view.passedFilter ? "acceptable" : "outside filter"
    )
  );
  card.append(head);

  const bars = el("div", "bars");
  for (const bar of view.bars) {
    const row = el("div", "bar-row");
    row.append(el("span", "bar-name", bar.feature));
    const track = el("div", "bar-track");
    const fill = el("div", bar.improves ? "bar-fill improves" : "bar-fill worsens");
    fill.style.width = `${Math.min(bar.percent, 100)}%`;
    track.append(fill);
    row.append(track);
    row.append(el("span", "bar-label", bar.label));
    bars.append(row);
  }
  card.append(bars);

  const diff = el("ul", "diff");
  for (const entry of view.diff) {
    const product = products.get(entry.product_id);
    const name = product ? product.name : entry.product_id;
    diff.append(
      el(
        "li",
        entry.delta > 0 ? "diff-add" : "diff-remove",
        `${entry.delta > 0 ? "+" : ""}${entry.delta} ${name}`
      )
    );
  }
  if (!view.diff.length) diff.append(el("li", "diff-none", "identical basket"));
  card.append(diff);

  const accept = el("button", "accept", "Accept this basket");
  accept.addEventListener("click", () => onAccept(view.index));
  card.append(accept);
  return card;
}

export function renderRecommendations(
  session: Session,
  products: Map<string, CatalogProduct>,
  onAccept: (originalIndex: number) => void,
  onDecline: () => void
): HTMLElement {
  const container = el("section", "recommendations");
  container.append(el("h2", undefined, "Recommendations"));
  const views = session.views();
  if (!views.length) {
    container.append(
      el("p", "empty", "no acceptable recommendation for this basket")
    );
    return container;
  }
  for (const view of views) {
    container.append(renderRecommendation(view, products, onAccept));
  }
  const decline = el("button", "decline", "Keep my basket (decline all)");
  decline.addEventListener("click", onDecline);
  container.append(decline);
  return container;
}

export function renderStatus(session: Session): HTMLElement {
  const status = el("p", `status status-${session.phase}`);
  if (session.phase === "working") status.textContent = "optimizing…";
  else if (session.phase === "failed")
    status.textContent = `error: ${session.lastError}`;
  else if (session.phase === "reviewing")
    status.textContent = `accepted so far: ${session.acceptanceCount()}`;
  return status;
}
