"""The annotation driver: fan-out, vote, route, review, refine, persist.

AnnotationRun walks the dataset in batches. Every sample is fanned out to all
registered backends, voted, and either accepted directly or sent to the
configured reviewer. Reviewed samples feed the refinement pool; when the pool
fills, the run pauses and fine-tunes every backend before continuing.

Output records append to a JSONL file as each batch completes, and a
checkpoint is written after the file is flushed. On resume, output lines past
the checkpoint cursor (a crash window) are dropped, which keeps a resumed run
byte-identical to an uninterrupted one.
"""
from __future__ import annotations

import json
import time
import uuid
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Protocol, Sequence, Union

from .checkpoint import read_checkpoint, write_checkpoint
from .core import (
    LabelSchema,
    Route,
    RouteReason,
    RunConfig,
    Sample,
    VoteOutcome,
    build_vote_outcome,
)
from .costs import CostLedger, PriceTable, format_usd, reduction_percent
from .errors import InvalidInput, UnresolvedSample
from .gateway import BackendRegistry, FanoutResult, predict_fanout
from .meta import ExpertLabel, Resolver, review_sample
from .refinement import HardSample, RefinementScheduler, SchedulerState

UNRESOLVED_LABEL = "unresolved"


class Source(str, Enum):
    CONSENSUS = "consensus"
    LLM_REVIEW = "llm_review"
    HUMAN_REVIEW = "human_review"
    UNRESOLVED_FALLBACK = "unresolved_fallback"


@dataclass(frozen=True)
class OutputRecord:
    """One annotated sample as written to the output JSONL."""

    sample_id: str
    label: str
    label_index: Optional[int]
    source: Source
    uncertainty: float
    votes: tuple[dict, ...]
    seq: int
    ts: Union[int, float]

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "label": self.label,
            "label_index": self.label_index,
            "source": self.source.value,
            "uncertainty": self.uncertainty,
            "votes": list(self.votes),
            "seq": self.seq,
            "ts": self.ts,
        }


@dataclass
class Counters:
    direct: int = 0
    reviewed_llm: int = 0
    reviewed_human: int = 0
    unresolved: int = 0
    ties: int = 0
    backend_failures: int = 0

    def processed(self) -> int:
        return self.direct + self.reviewed_llm + self.reviewed_human + self.unresolved

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Counters":
        return cls(**d)


class Reviewer(Protocol):
    """Resolves a disputed sample to an expert label; may raise UnresolvedSample."""

    def review(self, sample: Sample, outcome: VoteOutcome) -> ExpertLabel: ...


class LlmReviewer:
    def __init__(self, schema: LabelSchema, client, max_attempts: int = 3):
        self.schema = schema
        self.client = client
        self.max_attempts = max_attempts

    def review(self, sample: Sample, outcome: VoteOutcome) -> ExpertLabel:
        return review_sample(sample, self.schema, self.client, self.max_attempts)


def _count_lines(path: Path) -> int:
    if not path.exists():
        return 0
    with open(path, "rb") as fh:
        return sum(1 for _ in fh)


def _trim_lines(path: Path, keep: int) -> None:
    """Drop output lines past the checkpoint cursor (crash recovery)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    if len(lines) <= keep:
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(lines[:keep])


class AnnotationRun:
    """Owns all mutable state of one annotation run.

    The instance doubles as the live status source for the review service, so
    every read of derived state goes through ``status_payload`` under the
    internal lock.
    """

    def __init__(
        self,
        config: RunConfig,
        schema: LabelSchema,
        registry: BackendRegistry,
        reviewer: Reviewer,
        out_path: Union[str, Path],
        checkpoint_path: Optional[Union[str, Path]] = None,
        ledger: Optional[CostLedger] = None,
        run_id: Optional[str] = None,
    ):
        self.config = config
        self.schema = schema
        self.registry = registry
        self.reviewer = reviewer
        self.out_path = Path(out_path)
        self.checkpoint_path = Path(checkpoint_path) if checkpoint_path else None
        self.ledger = ledger if ledger is not None else CostLedger()
        self.run_id = run_id or uuid.uuid4().hex[:12]
        self.scheduler = RefinementScheduler(config.beta, config.refine)
        self.counters = Counters()
        self.cursor = 0
        self._tick = 0
        self.finished = False

    # -- clock ------------------------------------------------------------

    def _timestamp(self) -> Union[int, float]:
        if self.config.wall_clock_timestamps:
            return time.time()
        t = self._tick
        self._tick += 1
        return t

    # -- checkpointing ------------------------------------------------------

    def _payload(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": self.config.to_dict(),
            "schema": {"task_name": self.schema.task_name, "labels": list(self.schema.labels)},
            "cursor": self.cursor,
            "tick": self._tick,
            "counters": self.counters.to_dict(),
            "ledger": self.ledger.to_dict(),
            "scheduler": self.scheduler.to_dict(),
            "backend_versions": self.registry.versions(),
            "output_lines": self.cursor,
        }

    def _save_checkpoint(self) -> None:
        if self.checkpoint_path is not None:
            write_checkpoint(self.checkpoint_path, self._payload())

    def _restore_checkpoint(self) -> None:
        if self.checkpoint_path is None:
            raise InvalidInput("resume requested but no checkpoint path configured")
        payload = read_checkpoint(self.checkpoint_path)
        if payload["schema"]["labels"] != list(self.schema.labels):
            raise InvalidInput("checkpoint schema does not match the configured schema")
        if payload["config"] != self.config.to_dict():
            raise InvalidInput("checkpoint config does not match the configured run")
        self.run_id = payload["run_id"]
        self.cursor = payload["cursor"]
        self._tick = payload["tick"]
        self.counters = Counters.from_dict(payload["counters"])
        self.ledger.load_dict(payload["ledger"])
        self.scheduler.restore(payload["scheduler"])
        self.registry.restore_versions(payload["backend_versions"])
        _trim_lines(self.out_path, payload["output_lines"])
        have = _count_lines(self.out_path)
        if have != payload["output_lines"]:
            raise InvalidInput(
                f"output file has {have} lines, checkpoint expects {payload['output_lines']}"
            )

    # -- per-sample processing ---------------------------------------------

    def _process(self, sample: Sample, fanout: FanoutResult, seq: int) -> OutputRecord:
        failed = tuple(f.backend_id for f in fanout.failures)
        outcome = build_vote_outcome(
            sample.id,
            fanout.predictions,
            self.config.k,
            self.config.epsilon,
            self.schema,
            failed_backends=failed,
        )
        if failed:
            self.counters.backend_failures += 1
        if outcome.route_reason is RouteReason.TIE:
            self.counters.ties += 1

        votes = tuple(
            {
                "backend_id": p.backend_id,
                "label": self.schema.name_of(p.label),
                "confidence": p.confidence,
                "model_version": p.model_version,
            }
            for p in outcome.predictions
        )

        if outcome.route is Route.DIRECT:
            label_index: Optional[int] = outcome.winner
            source = Source.CONSENSUS
            self.counters.direct += 1
        else:
            try:
                expert = self.reviewer.review(sample, outcome)
            except UnresolvedSample:
                # Review never settled; fall back to the plurality winner when
                # one exists, else emit the sentinel. Not pooled for refinement.
                label_index = outcome.winner
                source = Source.UNRESOLVED_FALLBACK
                self.counters.unresolved += 1
            else:
                label_index = expert.label
                if expert.resolver is Resolver.HUMAN:
                    source = Source.HUMAN_REVIEW
                    self.counters.reviewed_human += 1
                else:
                    source = Source.LLM_REVIEW
                    self.counters.reviewed_llm += 1
                hard = HardSample(
                    sample_id=sample.id,
                    text=sample.text,
                    votes=outcome.predictions,
                    expert_label=self.schema.name_of(expert.label),
                    resolver=expert.resolver,
                )
                _, triggered = self.scheduler.push(hard)
                if triggered:
                    self.scheduler.run_cycle(self.registry)

        label = self.schema.name_of(label_index) if label_index is not None else UNRESOLVED_LABEL
        return OutputRecord(
            sample_id=sample.id,
            label=label,
            label_index=label_index,
            source=source,
            uncertainty=outcome.uncertainty,
            votes=votes,
            seq=seq,
            ts=self._timestamp(),
        )

    # -- main loop -----------------------------------------------------------

    def run(
        self,
        samples: Sequence[Sample],
        stop_after: Optional[int] = None,
        resume: bool = False,
    ) -> "AnnotationRun":
        if self.registry.size() != self.config.k:
            raise InvalidInput(
                f"config expects k={self.config.k} backends, registry has {self.registry.size()}"
            )
        if resume:
            self._restore_checkpoint()
            # A checkpoint taken right after the pool filled leaves a cycle
            # owed; settle it before touching new samples.
            if self.scheduler.state is SchedulerState.REFINE_PENDING:
                self.scheduler.run_cycle(self.registry)
        else:
            self.out_path.parent.mkdir(parents=True, exist_ok=True)
            open(self.out_path, "w").close()

        if stop_after is None:
            limit = len(samples)
        else:
            # Checkpoints are taken at batch boundaries, and votes are fanned
            # out a batch at a time, so an early stop rounds up to the next
            # boundary. A resumed run then walks the same batch grid as an
            # uninterrupted one, which keeps the two byte-identical.
            b = self.config.batch_size
            limit = min(len(samples), ((max(stop_after, 0) + b - 1) // b) * b)
        while self.cursor < limit:
            upper = min(self.cursor + self.config.batch_size, limit)
            batch = samples[self.cursor : upper]
            fanout = predict_fanout(
                batch,
                self.registry,
                retries=self.config.backend_retries,
                parallelism=self.config.fanout_parallelism,
            )
            # No lock here: a blocking human review must not starve the status
            # endpoint. Status reads are monotone-counter snapshots under the GIL.
            lines = []
            for offset, (sample, fr) in enumerate(zip(batch, fanout)):
                rec = self._process(sample, fr, seq=self.cursor + offset)
                lines.append(_record_line(rec))
            self.cursor = upper
            with open(self.out_path, "a", encoding="utf-8") as fh:
                fh.writelines(lines)
            self._save_checkpoint()
        self.finished = self.cursor >= len(samples)
        return self

    # -- live status --------------------------------------------------------

    def status_payload(self) -> dict:
        return {
            "run_id": self.run_id,
            "cursor": self.cursor,
            "finished": self.finished,
            "counters": self.counters.to_dict(),
            "scheduler_state": self.scheduler.state.value,
            "pool_size": self.scheduler.pool_size(),
            "pool_threshold": self.scheduler.beta,
            "cycles": [c.to_dict() for c in list(self.scheduler.cycles)],
            "backend_versions": self.registry.versions(),
            "ledger": self.ledger.to_dict(),
        }


@dataclass
class RunView:
    """Just enough of a finished run, rebuilt from its checkpoint, to report on."""

    run_id: str
    out_path: Path
    ledger: CostLedger
    counters: Counters
    scheduler: RefinementScheduler


def load_run_view(
    checkpoint_path: Union[str, Path], out_path: Union[str, Path]
) -> RunView:
    payload = read_checkpoint(checkpoint_path)
    scheduler = RefinementScheduler(payload["scheduler"]["beta"])
    scheduler.restore(payload["scheduler"])
    return RunView(
        run_id=payload["run_id"],
        out_path=Path(out_path),
        ledger=CostLedger.from_dict(payload["ledger"]),
        counters=Counters.from_dict(payload["counters"]),
        scheduler=scheduler,
    )


def _record_line(rec: OutputRecord) -> str:
    return json.dumps(rec.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"


def read_output(path: Union[str, Path]) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def report(
    run: Union["AnnotationRun", "RunView"],
    samples: Optional[Sequence[Sample]] = None,
    prices: Optional[PriceTable] = None,
) -> dict:
    """Summary of a (possibly partial) run: accuracy, calls, tokens, money.

    Accuracy needs gold labels on the samples; sources without gold coverage
    report None. The call-reduction figure compares expert review calls against
    the one-call-per-sample cost of annotating directly with the reviewer.
    """
    records = read_output(run.out_path)
    n = len(records)

    by_source: dict[str, dict] = {}
    gold = {}
    if samples is not None:
        gold = {s.id: s.gold_label for s in samples if s.gold_label is not None}
    overall_right = overall_scored = 0
    for rec in records:
        bucket = by_source.setdefault(rec["source"], {"count": 0, "right": 0, "scored": 0})
        bucket["count"] += 1
        g = gold.get(rec["sample_id"])
        if g is not None and rec["label_index"] is not None:
            bucket["scored"] += 1
            overall_scored += 1
            if rec["label_index"] == g:
                bucket["right"] += 1
                overall_right += 1

    def acc(right: int, scored: int) -> Optional[float]:
        return round(right / scored, 4) if scored else None

    review_calls = run.ledger.calls(category="review")
    usage = run.ledger.totals()
    out = {
        "run_id": run.run_id,
        "samples": n,
        "counters": run.counters.to_dict(),
        "cycles_completed": len(run.scheduler.cycles),
        "pool_size": run.scheduler.pool_size(),
        "accuracy": acc(overall_right, overall_scored),
        "accuracy_by_source": {
            src: {"count": b["count"], "accuracy": acc(b["right"], b["scored"])}
            for src, b in sorted(by_source.items())
        },
        "review_llm_calls": review_calls,
        "llm_tokens": {"input": usage.input_tokens, "output": usage.output_tokens},
        "call_reduction_percent": (
            str(reduction_percent(n, review_calls)) if n else None
        ),
    }
    if prices is not None:
        out["cost_usd"] = {
            p: format_usd(run.ledger.cost_usd(prices, p)) for p in run.ledger.providers()
        }
        out["cost_usd"]["total"] = format_usd(run.ledger.cost_usd(prices))
    return out
