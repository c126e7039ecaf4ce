"""Command line entry points.

Subcommands: select, annotate, report, sweep, cost. Configuration comes from a
JSON or TOML file plus dotted --set overrides; secrets only ever come from the
environment (LLM_BASE_URL / LLM_API_KEY). Exit codes: 0 success, 1 runtime
failure, 2 usage or configuration problem.
"""
from __future__ import annotations

import argparse
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from pathlib import Path
from typing import Optional

from .core import LabelSchema, ReviewMode, RunConfig
from .costs import (
    CostLedger,
    PriceEntry,
    PriceTable,
    estimate_cost,
    format_usd,
)
from .errors import InvalidInput, LabelvoteError
from .gateway import BackendRegistry, HttpBackend
from .ingest import load_samples
from .llm import HttpChatClient, LlmEndpointConfig
from .meta import LocalCatalog, search_candidates, select_models
from .runner import AnnotationRun, LlmReviewer, load_run_view, report
from .service import HumanReviewer, HumanReviewQueue, HybridReviewer, ReviewService
from .stubs import NoisyBackend
from .sweep import (
    DEFAULT_BETA_GRID,
    DEFAULT_K_GRID,
    render_sweep_json,
    render_sweep_text,
    run_sweep,
    stub_world,
)


def _load_config_file(path: Optional[str]) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise InvalidInput(f"config file not found: {path}")
    if p.suffix == ".toml":
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    with open(p, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _apply_overrides(config: dict, overrides: list[str]) -> dict:
    """Apply dotted-key overrides like run.epsilon=0.4; values parse as JSON."""
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise InvalidInput(f"--set expects key=value, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise InvalidInput(f"--set path {key!r} crosses a non-table value")
        node[parts[-1]] = value
    return config


def _schema_from_config(config: dict, labels_flag: Optional[str], task_flag: Optional[str]) -> LabelSchema:
    section = config.get("schema", {})
    labels = labels_flag.split(",") if labels_flag else section.get("labels")
    task = task_flag or section.get("task_name", "task")
    if not labels:
        raise InvalidInput("no labels configured (use --labels or a [schema] section)")
    return LabelSchema(task_name=task, labels=tuple(l.strip() for l in labels))


def _run_config(config: dict) -> RunConfig:
    return RunConfig.from_dict(config.get("run", {}))


def _price_table(config: dict, prices_flag: Optional[str]) -> Optional[PriceTable]:
    if prices_flag:
        return PriceTable.from_file(prices_flag)
    section = config.get("prices")
    if not section:
        return None
    table = PriceTable()
    for provider, entry in section.items():
        table.set(
            provider,
            PriceEntry.from_usd(entry["input_per_1m_usd"], entry["output_per_1m_usd"]),
        )
    return table


def _build_registry(config: dict, schema: LabelSchema, run_config: RunConfig, samples) -> BackendRegistry:
    """Real HTTP backends when configured, otherwise simulated stubs."""
    registry = BackendRegistry(schema)
    backends = config.get("backends", [])
    if backends:
        for entry in backends:
            registry.register(
                entry["id"],
                HttpBackend(entry["url"], timeout=run_config.backend_timeout),
                label_map=entry.get("label_map"),
            )
        return registry
    sim = config.get("simulate", {})
    accuracy = float(sim.get("backend_accuracy", 0.9))
    gold = {
        s.text: schema.name_of(s.gold_label) for s in samples if s.gold_label is not None
    }
    for i in range(run_config.k):
        registry.register(
            f"stub-{i}",
            NoisyBackend(f"stub-{i}", schema.labels, gold, accuracy=accuracy, seed=run_config.seed),
        )
    return registry


# --- subcommands --------------------------------------------------------------


def cmd_select(args) -> int:
    config = _apply_overrides(_load_config_file(args.config), args.set or [])
    catalog = LocalCatalog(args.catalog)
    candidates = search_candidates(args.task, catalog, max_candidates=args.max_candidates)
    if args.ranker == "llm":
        schema = _schema_from_config(config, args.labels, args.task)
        llm_section = config.get("llm", {})
        client = HttpChatClient(LlmEndpointConfig(**llm_section))
        chosen = select_models(schema, candidates, client, k=args.k)
    else:
        if len(candidates) < args.k:
            raise InvalidInput(
                f"need {args.k} candidates for task {args.task!r}, found {len(candidates)}"
            )
        chosen = candidates[: args.k]
    for c in chosen:
        print(c.model_id)
    return 0


def _make_reviewer(mode, schema, config, ledger, queue, samples):
    llm_section = dict(config.get("llm", {}))
    simulate = not config.get("backends") and not llm_section.pop("live", False)
    if simulate:
        from .sweep import oracle_review_client

        client = oracle_review_client(samples, schema, ledger)
    else:
        client = HttpChatClient(LlmEndpointConfig(**llm_section), ledger=ledger)
    llm = LlmReviewer(schema, client)
    if mode is ReviewMode.LLM:
        return llm
    if mode is ReviewMode.HUMAN:
        return HumanReviewer(queue, schema)
    return HybridReviewer(llm, queue, schema)


def cmd_annotate(args) -> int:
    config = _apply_overrides(_load_config_file(args.config), args.set or [])
    run_config = _run_config(config)
    if args.review_mode:
        run_config.review_mode = ReviewMode(args.review_mode)
    if args.print_config:
        effective = config.copy()
        effective["run"] = run_config.to_dict()
        print(json.dumps(effective, indent=2, sort_keys=True))
        return 0

    schema = _schema_from_config(config, args.labels, args.task)
    samples = load_samples(args.data, schema)
    registry = _build_registry(config, schema, run_config, samples)

    if args.resume and (args.checkpoint is None or not Path(args.checkpoint).exists()):
        raise InvalidInput("--resume needs an existing checkpoint file")

    queue = HumanReviewQueue() if run_config.review_mode is not ReviewMode.LLM else None
    ledger = CostLedger()
    reviewer = _make_reviewer(run_config.review_mode, schema, config, ledger, queue, samples)
    run = AnnotationRun(
        run_config,
        schema,
        registry,
        reviewer,
        args.out,
        checkpoint_path=args.checkpoint,
        ledger=ledger,
        run_id=args.run_id,
    )

    service = None
    if args.serve is not None:
        service = ReviewService(
            run, queue, port=args.serve, static_dir=args.static_dir
        ).start()
        print(f"serving on http://127.0.0.1:{service.port}", flush=True)

    try:
        run.run(samples, stop_after=args.stop_after, resume=args.resume)
    finally:
        if service is not None and not args.keep_serving:
            service.stop()

    prices = _price_table(config, args.prices)
    summary = report(run, samples=samples, prices=prices)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    config = _apply_overrides(_load_config_file(args.config), args.set or [])
    view = load_run_view(args.checkpoint, args.out)
    samples = None
    if args.data:
        schema = _schema_from_config(config, args.labels, args.task)
        samples = load_samples(args.data, schema)
    prices = _price_table(config, args.prices)
    print(json.dumps(report(view, samples=samples, prices=prices), indent=2, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    config = _apply_overrides(_load_config_file(args.config), args.set or [])
    schema = _schema_from_config(config, args.labels, args.task)
    samples = load_samples(args.data, schema)
    k_values = [int(v) for v in args.k.split(",")] if args.k else list(DEFAULT_K_GRID)
    beta_values = [int(v) for v in args.beta.split(",")] if args.beta else list(DEFAULT_BETA_GRID)
    sim = config.get("simulate", {})
    accuracy = float(sim.get("backend_accuracy", 0.9))
    epsilon = _run_config(config).epsilon if config.get("run") else 0.3
    seed = args.seed

    def factory(k: int, beta: int, out_path: Path):
        run = stub_world(
            samples,
            schema,
            out_path,
            k=k,
            beta=beta,
            epsilon=epsilon,
            seed=seed,
            backend_accuracy=accuracy,
        )
        return run, samples

    prices = _price_table(config, args.prices)
    rows = run_sweep(k_values, beta_values, factory, args.workdir, prices=prices)
    if args.format == "json":
        sys.stdout.write(render_sweep_json(rows))
    else:
        sys.stdout.write(render_sweep_text(rows))
    return 0


def cmd_cost(args) -> int:
    try:
        in_usd, out_usd = args.price.split(",")
    except ValueError:
        raise InvalidInput("--price expects INPUT,OUTPUT dollars per 1M tokens") from None
    price = PriceEntry.from_usd(in_usd.strip(), out_usd.strip())
    total = estimate_cost(args.n, args.in_tokens, args.out_tokens, price)
    print(format_usd(total))
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labelvote",
        description="Committee-of-specialists text annotation with expert review and refinement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON or TOML config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (dotted path)")

    p_select = sub.add_parser("select", help="pick committee members from a model catalog")
    common(p_select)
    p_select.add_argument("--task", required=True)
    p_select.add_argument("--labels", help="comma-separated label schema (needed for --ranker llm)")
    p_select.add_argument("--catalog", required=True, help="JSON file of candidate models")
    p_select.add_argument("--k", type=int, default=3)
    p_select.add_argument("--max-candidates", type=int, default=50)
    p_select.add_argument("--ranker", choices=["llm", "downloads"], default="downloads")
    p_select.set_defaults(fn=cmd_select)

    p_ann = sub.add_parser("annotate", help="run the annotation pipeline over a dataset")
    common(p_ann)
    p_ann.add_argument("--data", required=True, help="input dataset (.jsonl or .csv)")
    p_ann.add_argument("--out", required=True, help="output JSONL path")
    p_ann.add_argument("--labels", help="comma-separated label schema")
    p_ann.add_argument("--task", help="task name for the schema")
    p_ann.add_argument("--checkpoint", help="checkpoint file path")
    p_ann.add_argument("--resume", action="store_true", help="continue from the checkpoint")
    p_ann.add_argument(
        "--stop-after",
        type=int,
        help="checkpoint and stop at the first batch boundary covering N samples",
    )
    p_ann.add_argument("--review-mode", choices=[m.value for m in ReviewMode])
    p_ann.add_argument("--serve", type=int, metavar="PORT", help="expose the review API (0 = ephemeral port)")
    p_ann.add_argument("--static-dir", help="directory of UI files to serve at /")
    p_ann.add_argument("--keep-serving", action="store_true", help="leave the server up after the run")
    p_ann.add_argument("--prices", help="price table JSON for the cost section")
    p_ann.add_argument("--run-id", help="stable run id (default: random)")
    p_ann.add_argument("--print-config", action="store_true", help="print the effective config and exit")
    p_ann.set_defaults(fn=cmd_annotate)

    p_rep = sub.add_parser("report", help="summarize a finished run from its artifacts")
    common(p_rep)
    p_rep.add_argument("--out", required=True, help="output JSONL of the run")
    p_rep.add_argument("--checkpoint", required=True)
    p_rep.add_argument("--data", help="dataset with gold labels for accuracy")
    p_rep.add_argument("--labels")
    p_rep.add_argument("--task")
    p_rep.add_argument("--prices")
    p_rep.set_defaults(fn=cmd_report)

    p_sweep = sub.add_parser("sweep", help="grid-run committee size and refinement threshold")
    common(p_sweep)
    p_sweep.add_argument("--data", required=True)
    p_sweep.add_argument("--labels")
    p_sweep.add_argument("--task")
    p_sweep.add_argument("--k", help="comma-separated committee sizes")
    p_sweep.add_argument("--beta", help="comma-separated refinement thresholds")
    p_sweep.add_argument("--workdir", default="sweep_out")
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--format", choices=["text", "json"], default="text")
    p_sweep.add_argument("--prices")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_cost = sub.add_parser("cost", help="estimate direct single-model annotation cost")
    p_cost.add_argument("--n", type=int, required=True, help="number of samples")
    p_cost.add_argument("--in", dest="in_tokens", type=int, required=True, help="input tokens per sample")
    p_cost.add_argument("--out", dest="out_tokens", type=int, required=True, help="output tokens per sample")
    p_cost.add_argument("--price", required=True, help="INPUT,OUTPUT dollars per 1M tokens")
    p_cost.set_defaults(fn=cmd_cost)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LabelvoteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
