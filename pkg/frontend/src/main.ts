/** Bootstrap: load the catalog, wire the session to the page. */

import { GatewayClient } from "./api.js";
import { Session } from "./session.js";
import { CatalogProduct } from "./types.js";
import {
  renderBasketEditor,
  renderRecommendations,
  renderSliders,
  renderStatus,
} from "./ui.js";

const API_BASE = (window as unknown as { GREENBASKET_API?: string })
  .GREENBASKET_API ?? "http://localhost:8000";

async function boot() {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");

  const client = new GatewayClient(API_BASE);
  const session = new Session(client);
  const catalog = await client.getCatalog();
  const products = new Map<string, CatalogProduct>(
    catalog.products.map((p) => [p.product_id, p])
  );

  const redraw = () => {
    root.replaceChildren();
    root.append(renderStatus(session));
    root.append(renderBasketEditor(session, products, redraw));
    root.append(renderSliders(session, redraw));

    const submit = document.createElement("button");
    submit.className = "submit";
    submit.textContent = "Recommend greener baskets";
    submit.disabled = !session.canSubmit();
    submit.addEventListener("click", async () => {
      redraw();
      try {
        await session.submit();
      } catch {
        // session.lastError carries the message
      }
      redraw();
    });
    root.append(submit);

    if (session.phase === "reviewing") {
      root.append(
        renderRecommendations(
          session,
          products,
          async (index) => {
            await session.accept(index);
            redraw();
          },
          async () => {
            await session.declineAll();
            redraw();
          }
        )
      );
    }
  };

  redraw();
}

boot().catch((err) => {
  const root = document.getElementById("app");
  if (root) root.textContent = `failed to start: ${err}`;
});
