import { PipelineApi } from "./api.js";
import { ReviewController } from "./controller.js";
import type { PriceRate } from "./dashboard.js";
import { appView } from "./view.js";

declare global {
  interface Window {
    // optional rate table injected by whoever hosts the page
    REVIEW_UI_PRICES?: Record<string, PriceRate>;
  }
}

function boot(): void {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app container");
  }
  const api = new PipelineApi("");
  const controller = new ReviewController(api, (state) => {
    root.innerHTML = appView(state, window.REVIEW_UI_PRICES);
  });

  root.addEventListener("click", (event) => {
    const target = event.target instanceof Element ? event.target.closest("[data-label]") : null;
    const label = target?.getAttribute("data-label");
    if (label) {
      void controller.submit(label);
    }
  });

  window.addEventListener("keydown", (event) => {
    if (
      event.target instanceof HTMLInputElement ||
      event.target instanceof HTMLTextAreaElement ||
      event.ctrlKey ||
      event.metaKey ||
      event.altKey
    ) {
      return;
    }
    if (controller.handleKey(event.key)) {
      event.preventDefault();
    }
  });

  void controller.start();
}

boot();
