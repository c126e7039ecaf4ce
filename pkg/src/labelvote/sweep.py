"""Parameter sweeps over committee size and refinement threshold.

Every grid cell gets a fresh world (backends, reviewer, scheduler) from a
factory, runs the full pipeline, and reports accuracy plus call/cost figures.
The text rendering mirrors the usual presentation: when only one dimension
varies, a single accuracy row under a header of parameter values; otherwise a
k-by-threshold matrix.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from .core import LabelSchema, RunConfig, Sample
from .costs import CostLedger, PriceTable, format_usd
from .errors import InvalidInput
from .gateway import BackendRegistry
from .llm import ChatMessage, ScriptedChatClient
from .runner import AnnotationRun, LlmReviewer, report
from .stubs import NoisyBackend

DEFAULT_K_GRID = (2, 3, 4, 5)
DEFAULT_BETA_GRID = (500, 1000, 2000, 3000)

# Token profile charged per scripted review call, so sweep cost columns are
# non-trivial without a live endpoint: roughly a short prompt plus a one-word
# reply.
SIM_INPUT_TOKENS = 48
SIM_OUTPUT_TOKENS = 4


def oracle_review_client(
    samples: Sequence[Sample],
    schema: LabelSchema,
    ledger: Optional[CostLedger] = None,
    provider: str = "scripted",
) -> ScriptedChatClient:
    """Chat client that answers every review with the sample's gold label.

    Samples without gold fall back to the first schema label. Replies key on
    the final user message, which the reviewer fills with the sample text.
    """
    by_text = {
        s.text: schema.name_of(s.gold_label) for s in samples if s.gold_label is not None
    }

    def answer(messages: Sequence[ChatMessage]) -> str:
        user = [m for m in messages if m.role == "user"]
        text = user[-1].content if user else ""
        return by_text.get(text, schema.labels[0])

    return ScriptedChatClient(
        answer,
        provider=provider,
        ledger=ledger,
        input_tokens_per_call=SIM_INPUT_TOKENS,
        output_tokens_per_call=SIM_OUTPUT_TOKENS,
    )


def stub_world(
    samples: Sequence[Sample],
    schema: LabelSchema,
    out_path: Union[str, Path],
    k: int = 3,
    beta: int = 2000,
    epsilon: float = 0.3,
    seed: int = 0,
    backend_accuracy: float = 0.9,
    batch_size: int = 64,
    checkpoint_path: Optional[Union[str, Path]] = None,
    run_id: Optional[str] = None,
) -> AnnotationRun:
    """Fully offline world: noisy stub backends plus a gold-oracle reviewer."""
    config = RunConfig(k=k, epsilon=epsilon, beta=beta, seed=seed, batch_size=batch_size)
    registry = BackendRegistry(schema)
    gold = {s.text: schema.name_of(s.gold_label) for s in samples if s.gold_label is not None}
    for i in range(k):
        registry.register(
            f"stub-{i}",
            NoisyBackend(
                f"stub-{i}", schema.labels, gold, accuracy=backend_accuracy, seed=seed
            ),
        )
    ledger = CostLedger()
    reviewer = LlmReviewer(schema, oracle_review_client(samples, schema, ledger))
    return AnnotationRun(
        config,
        schema,
        registry,
        reviewer,
        out_path,
        checkpoint_path=checkpoint_path,
        ledger=ledger,
        run_id=run_id,
    )


WorldFactory = Callable[[int, int, Path], tuple[AnnotationRun, Sequence[Sample]]]


def run_sweep(
    k_values: Sequence[int],
    beta_values: Sequence[int],
    world_factory: WorldFactory,
    workdir: Union[str, Path],
    prices: Optional[PriceTable] = None,
) -> list[dict]:
    """Run every (k, threshold) cell in a fresh world and collect one row each."""
    if not k_values or not beta_values:
        raise InvalidInput("sweep grids must be non-empty")
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for k in k_values:
        for beta in beta_values:
            out_path = workdir / f"sweep_k{k}_b{beta}.jsonl"
            run, samples = world_factory(k, beta, out_path)
            run.run(samples)
            summary = report(run, samples=samples, prices=prices)
            row = {
                "k": k,
                "beta": beta,
                "accuracy": summary["accuracy"],
                "llm_calls": summary["review_llm_calls"],
                "reviews": run.counters.reviewed_llm
                + run.counters.reviewed_human
                + run.counters.unresolved,
                "cycles": summary["cycles_completed"],
            }
            if prices is not None:
                row["cost_usd"] = format_usd(run.ledger.cost_usd(prices))
            rows.append(row)
    return rows


def _fmt_acc(value) -> str:
    return "-" if value is None else f"{100 * value:.1f}"


def render_sweep_text(rows: Sequence[dict]) -> str:
    """Tables in the familiar layout; accuracy shown in percent."""
    ks = sorted({r["k"] for r in rows})
    betas = sorted({r["beta"] for r in rows})
    cell = {(r["k"], r["beta"]): r for r in rows}
    lines = []

    if len(ks) == 1 and len(betas) > 1:
        lines.append(f"accuracy by refinement threshold (k={ks[0]})")
        header = ["beta"] + [str(b) for b in betas]
        accs = ["Acc"] + [_fmt_acc(cell[(ks[0], b)]["accuracy"]) for b in betas]
        lines.extend(_format_grid([header, accs]))
    elif len(betas) == 1 and len(ks) > 1:
        lines.append(f"accuracy by committee size (beta={betas[0]})")
        header = ["k"] + [str(k) for k in ks]
        accs = ["Acc"] + [_fmt_acc(cell[(k, betas[0])]["accuracy"]) for k in ks]
        lines.extend(_format_grid([header, accs]))
    else:
        lines.append("accuracy by committee size and refinement threshold")
        grid = [["k\\beta"] + [str(b) for b in betas]]
        for k in ks:
            grid.append([str(k)] + [_fmt_acc(cell[(k, b)]["accuracy"]) for b in betas])
        lines.extend(_format_grid(grid))

    lines.append("")
    detail = [["k", "beta", "acc%", "reviews", "llm_calls", "cycles"]]
    has_cost = any("cost_usd" in r for r in rows)
    if has_cost:
        detail[0].append("cost_usd")
    for r in rows:
        line = [
            str(r["k"]),
            str(r["beta"]),
            _fmt_acc(r["accuracy"]),
            str(r["reviews"]),
            str(r["llm_calls"]),
            str(r["cycles"]),
        ]
        if has_cost:
            line.append(r.get("cost_usd", "-"))
        detail.append(line)
    lines.extend(_format_grid(detail))
    return "\n".join(lines) + "\n"


def render_sweep_json(rows: Sequence[dict]) -> str:
    return json.dumps(list(rows), indent=2) + "\n"


def _format_grid(grid: Sequence[Sequence[str]]) -> list[str]:
    widths = [max(len(row[i]) for row in grid) for i in range(len(grid[0]))]
    return ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in grid]
