// Pure view-model helpers for the run dashboard: counters, pool progress,
// refinement cycle cards and ledger cost rows. No DOM access here so every
// branch is unit-testable.

import type { Counters, CycleInfo, LedgerCell, StatusPayload } from "./api.js";

export interface CounterRow {
  label: string;
  value: number;
}

export function counterRows(c: Counters): CounterRow[] {
  return [
    { label: "consensus", value: c.direct },
    { label: "LLM reviewed", value: c.reviewed_llm },
    { label: "human reviewed", value: c.reviewed_human },
    { label: "unresolved", value: c.unresolved },
    { label: "ties", value: c.ties },
    { label: "backend failures", value: c.backend_failures },
  ];
}

/** Pool fill as an integer percentage of the refinement threshold, clamped. */
export function poolProgressPercent(poolSize: number, threshold: number): number {
  if (threshold <= 0) {
    return 0;
  }
  const pct = Math.floor((poolSize / threshold) * 100);
  return Math.max(0, Math.min(100, pct));
}

export interface CycleCard {
  title: string;
  snapshotSize: number;
  bumps: string[];
}

export function cycleCards(cycles: CycleInfo[]): CycleCard[] {
  return cycles.map((c) => ({
    title: `cycle ${c.cycle_index}`,
    snapshotSize: c.snapshot_size,
    bumps: c.backends.map(
      (b) =>
        `${b.backend_id} v${b.version_before} to v${b.version_after} ` +
        `(loss ${b.train_loss_before.toFixed(4)} to ${b.train_loss_after.toFixed(4)})`,
    ),
  }));
}

// --- money ---------------------------------------------------------------
//
// Mirrors the pipeline's integer accounting: rates are micro-dollars per
// million tokens, costs are picodollars, all in BigInt so token counts of any
// size stay exact. Rendering rounds half-up to the cent.

export interface PriceRate {
  input_per_1m_usd: string;
  output_per_1m_usd: string;
}

const MICRO = 1_000_000n;

/** Parse a decimal dollar string ("15", "0.5") into micro-dollars. */
export function usdToMicro(usd: string): bigint {
  const m = /^(\d+)(?:\.(\d{1,6}))?$/.exec(usd.trim());
  if (!m) {
    throw new Error(`cannot parse dollar amount ${JSON.stringify(usd)}`);
  }
  const whole = BigInt(m[1]) * MICRO;
  const frac = m[2] ? BigInt(m[2].padEnd(6, "0")) : 0n;
  return whole + frac;
}

export function costPico(inputTokens: number, outputTokens: number, rate: PriceRate): bigint {
  return (
    BigInt(inputTokens) * usdToMicro(rate.input_per_1m_usd) +
    BigInt(outputTokens) * usdToMicro(rate.output_per_1m_usd)
  );
}

/** Picodollars to a "12.34" string, half-up on the cent. */
export function formatUsdPico(pico: bigint): string {
  const perCent = 10_000_000_000n;
  const cents = (pico + perCent / 2n) / perCent;
  const dollars = cents / 100n;
  const rest = cents % 100n;
  return `${dollars}.${rest.toString().padStart(2, "0")}`;
}

export interface LedgerRow {
  provider: string;
  category: string;
  calls: number;
  inputTokens: number;
  outputTokens: number;
  usd: string | null;
}

/**
 * Flatten the status ledger (keys are "provider/category") into table rows,
 * pricing each one when a rate for its provider is known.
 */
export function ledgerRows(
  ledger: Record<string, LedgerCell>,
  rates?: Record<string, PriceRate>,
): LedgerRow[] {
  return Object.keys(ledger)
    .sort()
    .map((key) => {
      const slash = key.indexOf("/");
      const provider = slash < 0 ? key : key.slice(0, slash);
      const category = slash < 0 ? "" : key.slice(slash + 1);
      const cell = ledger[key];
      const rate = rates?.[provider];
      return {
        provider,
        category,
        calls: cell.calls,
        inputTokens: cell.input_tokens,
        outputTokens: cell.output_tokens,
        usd: rate ? formatUsdPico(costPico(cell.input_tokens, cell.output_tokens, rate)) : null,
      };
    });
}

export function ledgerTotalUsd(
  ledger: Record<string, LedgerCell>,
  rates: Record<string, PriceRate>,
): string | null {
  let total = 0n;
  let priced = false;
  for (const [key, cell] of Object.entries(ledger)) {
    const provider = key.includes("/") ? key.slice(0, key.indexOf("/")) : key;
    const rate = rates[provider];
    if (!rate) {
      continue;
    }
    priced = true;
    total += costPico(cell.input_tokens, cell.output_tokens, rate);
  }
  return priced ? formatUsdPico(total) : null;
}

export function totalLlmCalls(status: StatusPayload): number {
  return Object.values(status.ledger).reduce((n, cell) => n + cell.calls, 0);
}
