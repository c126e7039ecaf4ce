// HTML string builders. Pure functions so the unit tests can assert on markup
// without a DOM; main.ts assigns the result to innerHTML.

import type { QueueItem, SchemaInfo, StatusPayload } from "./api.js";
import type { ControllerState } from "./controller.js";
import {
  counterRows,
  cycleCards,
  ledgerRows,
  ledgerTotalUsd,
  poolProgressPercent,
  type PriceRate,
} from "./dashboard.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function formatUncertainty(u: number): string {
  return u.toFixed(3);
}

function confidencePercent(c: number): string {
  return `${(c * 100).toFixed(1)}%`;
}

export function itemView(item: QueueItem, schema: SchemaInfo, submitting: boolean): string {
  const votes = item.votes
    .map(
      (v) =>
        `<tr><td class="backend">${escapeHtml(v.backend_id)}</td>` +
        `<td class="vote-label">${escapeHtml(v.label)}</td>` +
        `<td class="confidence">${confidencePercent(v.confidence)}</td></tr>`,
    )
    .join("");
  const buttons = schema.labels
    .map((label, i) => {
      const disabled = submitting ? " disabled" : "";
      return (
        `<button type="button" data-label="${escapeHtml(label)}"${disabled}>` +
        `<kbd>${i + 1}</kbd> ${escapeHtml(label)}</button>`
      );
    })
    .join("");
  const suggestion = item.suggestion
    ? `<p class="suggestion">model suggests: <strong>${escapeHtml(item.suggestion)}</strong></p>`
    : "";
  return `
  <section class="review-item" data-sample-id="${escapeHtml(item.sample_id)}">
    <p class="sample-text">${escapeHtml(item.text)}</p>
    <table class="votes">
      <thead><tr><th>backend</th><th>vote</th><th>confidence</th></tr></thead>
      <tbody>${votes}</tbody>
    </table>
    <p class="uncertainty">disagreement U = <strong>${formatUncertainty(item.uncertainty)}</strong></p>
    ${suggestion}
    <div class="label-buttons">${buttons}</div>
  </section>`;
}

export function waitingView(state: ControllerState): string {
  if (state.phase === "offline") {
    const secs = (state.pollDelayMs / 1000).toFixed(0);
    return `<section class="banner offline">pipeline unreachable, retrying in ${secs}s</section>`;
  }
  if (state.status?.finished) {
    return `<section class="banner done">run finished, queue closed</section>`;
  }
  return `<section class="banner waiting">waiting for the next disputed sample</section>`;
}

export function dashboardView(status: StatusPayload, rates?: Record<string, PriceRate>): string {
  const counters = counterRows(status.counters)
    .map((r) => `<li>${escapeHtml(r.label)}: <strong>${r.value}</strong></li>`)
    .join("");
  const pct = poolProgressPercent(status.pool_size, status.pool_threshold);
  const cycles = cycleCards(status.cycles)
    .map(
      (card) =>
        `<div class="cycle-card"><h4>${escapeHtml(card.title)}</h4>` +
        `<p>${card.snapshotSize} pooled samples</p>` +
        `<ul>${card.bumps.map((b) => `<li>${escapeHtml(b)}</li>`).join("")}</ul></div>`,
    )
    .join("");
  const rows = ledgerRows(status.ledger, rates)
    .map(
      (r) =>
        `<tr><td>${escapeHtml(r.provider)}</td><td>${escapeHtml(r.category)}</td>` +
        `<td>${r.calls}</td><td>${r.inputTokens}</td><td>${r.outputTokens}</td>` +
        `<td>${r.usd === null ? "-" : escapeHtml(r.usd)}</td></tr>`,
    )
    .join("");
  const total = rates ? ledgerTotalUsd(status.ledger, rates) : null;
  const totalLine = total === null ? "" : `<p class="ledger-total">total: $${escapeHtml(total)}</p>`;
  return `
  <aside class="dashboard">
    <h3>run ${escapeHtml(status.run_id)} (${escapeHtml(status.scheduler_state)})</h3>
    <ul class="counters">${counters}</ul>
    <div class="pool">
      <span>pool ${status.pool_size}/${status.pool_threshold}</span>
      <div class="progress"><div class="progress-fill" style="width: ${pct}%"></div></div>
    </div>
    <div class="cycles">${cycles || "<p>no refinement cycles yet</p>"}</div>
    <table class="ledger">
      <thead><tr><th>provider</th><th>category</th><th>calls</th><th>in</th><th>out</th><th>usd</th></tr></thead>
      <tbody>${rows || '<tr><td colspan="6">no LLM calls</td></tr>'}</tbody>
    </table>
    ${totalLine}
  </aside>`;
}

export function appView(state: ControllerState, rates?: Record<string, PriceRate>): string {
  const main =
    state.item && state.schema && (state.phase === "reviewing" || state.phase === "submitting")
      ? itemView(state.item, state.schema, state.phase === "submitting")
      : waitingView(state);
  const error = state.error
    ? `<p class="submit-error" role="alert">${escapeHtml(state.error)}</p>`
    : "";
  const dash = state.status ? dashboardView(state.status, rates) : "";
  return `<div class="layout"><main>${main}${error}</main>${dash}</div>`;
}
