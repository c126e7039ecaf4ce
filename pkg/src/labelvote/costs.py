"""Token/call accounting and exact money arithmetic.

Counters are plain integers. Prices are held as integer micro-dollars per
million tokens, so ``tokens * price`` lands on an integer picodollar grid and
sums stay exact no matter how the work is split up. Dollars only appear at
the rendering edge, where picodollars convert to a Decimal and get quantized
to cents.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import InvalidInput

MICRO_PER_DOLLAR = 10**6
PICO_PER_DOLLAR = 10**12

PriceLike = Union[int, float, str, Decimal]


def _usd_to_micro(value: PriceLike, what: str) -> int:
    """Parse a USD amount into integer micro-dollars, rejecting sub-micro precision."""
    try:
        d = Decimal(str(value))
    except Exception as exc:
        raise InvalidInput(f"{what}: not a number: {value!r}") from exc
    if d < 0:
        raise InvalidInput(f"{what}: must be non-negative, got {value!r}")
    micro = d * MICRO_PER_DOLLAR
    if micro != micro.to_integral_value():
        raise InvalidInput(f"{what}: finer than micro-dollars: {value!r}")
    return int(micro)


@dataclass(frozen=True)
class PriceEntry:
    """Per-provider price pair, micro-dollars per 1M tokens."""

    input_micro_per_1m: int
    output_micro_per_1m: int

    @classmethod
    def from_usd(cls, input_per_1m_usd: PriceLike, output_per_1m_usd: PriceLike) -> "PriceEntry":
        return cls(
            _usd_to_micro(input_per_1m_usd, "input price"),
            _usd_to_micro(output_per_1m_usd, "output price"),
        )


class PriceTable:
    """provider name -> PriceEntry, loadable from a JSON config file."""

    def __init__(self, entries: Optional[dict[str, PriceEntry]] = None):
        self.entries: dict[str, PriceEntry] = dict(entries or {})

    def set(self, provider: str, entry: PriceEntry) -> None:
        self.entries[provider] = entry

    def get(self, provider: str) -> Optional[PriceEntry]:
        return self.entries.get(provider)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "PriceTable":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        table = cls()
        for provider, spec in raw.items():
            table.set(provider, PriceEntry.from_usd(spec["input_per_1m_usd"], spec["output_per_1m_usd"]))
        return table

    def to_dict(self) -> dict:
        return {
            name: {
                "input_per_1m_usd": str(pico_to_usd(e.input_micro_per_1m * MICRO_PER_DOLLAR)),
                "output_per_1m_usd": str(pico_to_usd(e.output_micro_per_1m * MICRO_PER_DOLLAR)),
            }
            for name, e in self.entries.items()
        }


def tokens_cost_pico(input_tokens: int, output_tokens: int, price: PriceEntry) -> int:
    """Exact cost of a token mix in picodollars (integer, additive)."""
    if input_tokens < 0 or output_tokens < 0:
        raise InvalidInput("token counts must be non-negative")
    return input_tokens * price.input_micro_per_1m + output_tokens * price.output_micro_per_1m


def pico_to_usd(pico: int) -> Decimal:
    """Exact Decimal dollars from integer picodollars (no rounding)."""
    return Decimal(pico).scaleb(-12)


def format_usd(amount: Decimal) -> str:
    """Render dollars to the cent, half-up."""
    return str(amount.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def estimate_cost_pico(
    n_samples: int,
    in_tokens_per_sample: int,
    out_tokens_per_sample: int,
    price: PriceEntry,
) -> int:
    """Per-sample token profile scaled to n samples, in exact picodollars."""
    if n_samples < 0:
        raise InvalidInput("n_samples must be non-negative")
    return n_samples * tokens_cost_pico(in_tokens_per_sample, out_tokens_per_sample, price)


def estimate_cost(
    n_samples: int,
    in_tokens_per_sample: int,
    out_tokens_per_sample: int,
    price: PriceEntry,
) -> Decimal:
    """Exact USD for annotating n samples at a fixed per-sample token profile."""
    return pico_to_usd(estimate_cost_pico(n_samples, in_tokens_per_sample, out_tokens_per_sample, price))


def reduction_percent(calls_direct: int, calls_framework: int) -> Decimal:
    """(direct - framework) / direct as a percentage, two decimals."""
    if calls_direct <= 0:
        raise InvalidInput("calls_direct must be positive")
    frac = (Decimal(calls_direct) - Decimal(calls_framework)) / Decimal(calls_direct)
    return (frac * 100).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


@dataclass
class UsageCounters:
    input_tokens: int = 0
    output_tokens: int = 0
    calls: int = 0


class CostLedger:
    """Monotone per-(provider, category) token and call counters.

    Categories separate review traffic from selection traffic so the call
    reduction report can compare review calls against the one-call-per-sample
    baseline without mixing in selection overhead. Increments are thread-safe.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._counters: dict[tuple[str, str], UsageCounters] = {}

    def record(
        self,
        provider: str,
        input_tokens: int = 0,
        output_tokens: int = 0,
        calls: int = 1,
        category: str = "review",
    ) -> None:
        if input_tokens < 0 or output_tokens < 0 or calls < 0:
            raise InvalidInput("ledger increments must be non-negative")
        with self._lock:
            c = self._counters.setdefault((provider, category), UsageCounters())
            c.input_tokens += input_tokens
            c.output_tokens += output_tokens
            c.calls += calls

    # -- read side -------------------------------------------------------

    def providers(self) -> list[str]:
        return sorted({p for p, _ in self._counters})

    def totals(self, provider: Optional[str] = None, category: Optional[str] = None) -> UsageCounters:
        out = UsageCounters()
        with self._lock:
            for (p, cat), c in self._counters.items():
                if provider is not None and p != provider:
                    continue
                if category is not None and cat != category:
                    continue
                out.input_tokens += c.input_tokens
                out.output_tokens += c.output_tokens
                out.calls += c.calls
        return out

    def calls(self, provider: Optional[str] = None, category: Optional[str] = None) -> int:
        return self.totals(provider, category).calls

    def cost_pico(self, prices: PriceTable, provider: Optional[str] = None) -> int:
        """Derived cost; never stored. Providers without a price entry cost 0."""
        total = 0
        with self._lock:
            items = list(self._counters.items())
        for (p, _), c in items:
            if provider is not None and p != provider:
                continue
            entry = prices.get(p)
            if entry is None:
                continue
            total += tokens_cost_pico(c.input_tokens, c.output_tokens, entry)
        return total

    def cost_usd(self, prices: PriceTable, provider: Optional[str] = None) -> Decimal:
        return pico_to_usd(self.cost_pico(prices, provider))

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        with self._lock:
            return {
                f"{p}/{cat}": {
                    "input_tokens": c.input_tokens,
                    "output_tokens": c.output_tokens,
                    "calls": c.calls,
                }
                for (p, cat), c in sorted(self._counters.items())
            }

    @classmethod
    def from_dict(cls, data: dict) -> "CostLedger":
        ledger = cls()
        ledger.load_dict(data)
        return ledger

    def load_dict(self, data: dict) -> None:
        """Replace all counters in place (checkpoint resume keeps the object)."""
        with self._lock:
            self._counters.clear()
        for key, c in data.items():
            provider, _, category = key.partition("/")
            self.record(
                provider,
                input_tokens=c["input_tokens"],
                output_tokens=c["output_tokens"],
                calls=c["calls"],
                category=category or "review",
            )

    def snapshot_json(self) -> str:
        """Canonical JSON rendering used for byte-level determinism checks."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
