import { describe, expect, it } from "vitest";

import {
  costPico,
  counterRows,
  cycleCards,
  formatUsdPico,
  ledgerRows,
  ledgerTotalUsd,
  poolProgressPercent,
  usdToMicro,
} from "../src/dashboard.js";

describe("poolProgressPercent", () => {
  it("reports 40/50 as 80", () => {
    expect(poolProgressPercent(40, 50)).toBe(80);
  });

  it("clamps overfull and empty pools", () => {
    expect(poolProgressPercent(70, 50)).toBe(100);
    expect(poolProgressPercent(0, 50)).toBe(0);
  });

  it("treats a missing threshold as empty", () => {
    expect(poolProgressPercent(10, 0)).toBe(0);
  });

  it("floors instead of rounding up", () => {
    expect(poolProgressPercent(1, 3)).toBe(33);
  });
});

describe("counterRows", () => {
  it("names every counter", () => {
    const rows = counterRows({
      direct: 7,
      reviewed_llm: 2,
      reviewed_human: 1,
      unresolved: 0,
      ties: 3,
      backend_failures: 0,
    });
    expect(rows.map((r) => r.label)).toEqual([
      "consensus",
      "LLM reviewed",
      "human reviewed",
      "unresolved",
      "ties",
      "backend failures",
    ]);
    expect(rows[0].value).toBe(7);
    expect(rows[2].value).toBe(1);
  });
});

describe("cycleCards", () => {
  it("describes each backend's version bump and loss move", () => {
    const cards = cycleCards([
      {
        cycle_index: 0,
        snapshot_size: 50,
        wall_time_s: 0.2,
        backends: [
          {
            backend_id: "stub-0",
            version_before: 0,
            version_after: 1,
            train_loss_before: 1.0986,
            train_loss_after: 1.0432,
          },
        ],
      },
    ]);
    expect(cards).toHaveLength(1);
    expect(cards[0].title).toBe("cycle 0");
    expect(cards[0].snapshotSize).toBe(50);
    expect(cards[0].bumps[0]).toBe("stub-0 v0 to v1 (loss 1.0986 to 1.0432)");
  });
});

describe("money", () => {
  it("parses dollar strings into micro-dollars", () => {
    expect(usdToMicro("15")).toBe(15_000_000n);
    expect(usdToMicro("0.5")).toBe(500_000n);
    expect(usdToMicro("60.000001")).toBe(60_000_001n);
  });

  it("rejects garbage", () => {
    expect(() => usdToMicro("sixty")).toThrow();
    expect(() => usdToMicro("-1")).toThrow();
    expect(() => usdToMicro("1.0000001")).toThrow();
  });

  it("reproduces the 100k-sample estimate", () => {
    // 100000 samples at 1024 input and 20 output tokens each, $15/$60 per 1M
    const rate = { input_per_1m_usd: "15", output_per_1m_usd: "60" };
    const pico = costPico(100_000 * 1024, 100_000 * 20, rate);
    expect(pico).toBe(1_656_000_000_000_000n);
    expect(formatUsdPico(pico)).toBe("1656.00");
  });

  it("rounds half-up on the cent", () => {
    expect(formatUsdPico(5_000_000_000n)).toBe("0.01");
    expect(formatUsdPico(4_999_999_999n)).toBe("0.00");
    expect(formatUsdPico(125_000_000_000n)).toBe("0.13");
  });
});

describe("ledger rows", () => {
  const ledger = {
    "sim-oracle/review": { input_tokens: 1_000_000, output_tokens: 0, calls: 8 },
    "sim-oracle/selection": { input_tokens: 0, output_tokens: 500_000, calls: 2 },
  };
  const rates = { "sim-oracle": { input_per_1m_usd: "15", output_per_1m_usd: "60" } };

  it("splits the provider/category key and sorts", () => {
    const rows = ledgerRows(ledger);
    expect(rows.map((r) => [r.provider, r.category])).toEqual([
      ["sim-oracle", "review"],
      ["sim-oracle", "selection"],
    ]);
    expect(rows[0].calls).toBe(8);
    expect(rows[0].usd).toBeNull();
  });

  it("prices rows when rates are known", () => {
    const rows = ledgerRows(ledger, rates);
    expect(rows[0].usd).toBe("15.00");
    expect(rows[1].usd).toBe("30.00");
    expect(ledgerTotalUsd(ledger, rates)).toBe("45.00");
  });

  it("totals to null when no provider is priced", () => {
    expect(ledgerTotalUsd(ledger, {})).toBeNull();
  });
});
