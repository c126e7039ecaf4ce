"""Hard-sample pool and the pause/refine/resume scheduler.

Expert-reviewed samples accumulate in a pool. When the pool reaches the
configured threshold the scheduler pauses annotation, fine-tunes every backend
on a snapshot of the pool, archives the snapshot, and resumes. The durable
transition log only records transitions that actually committed, so after any
sequence of successes and failed attempts it still reads
annotating (refine_pending refining annotating)*.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

from .core import Prediction, RefineHparams
from .errors import IllegalState, InvalidInput, RefineFailed
from .gateway import BackendRegistry, WireRefineResponse, refine_all
from .meta import Resolver


class SchedulerState(str, Enum):
    ANNOTATING = "annotating"
    REFINE_PENDING = "refine_pending"
    REFINING = "refining"


@dataclass(frozen=True)
class HardSample:
    """A sample that went to expert review, with its resolved label."""

    sample_id: str
    text: str
    votes: tuple[Prediction, ...]
    expert_label: str
    resolver: Resolver

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "text": self.text,
            "votes": [
                {
                    "backend_id": v.backend_id,
                    "label": v.label,
                    "confidence": v.confidence,
                    "model_version": v.model_version,
                }
                for v in self.votes
            ],
            "expert_label": self.expert_label,
            "resolver": self.resolver.value,
        }

    @staticmethod
    def from_dict(d: dict) -> "HardSample":
        return HardSample(
            sample_id=d["sample_id"],
            text=d["text"],
            votes=tuple(
                Prediction(
                    backend_id=v["backend_id"],
                    label=v["label"],
                    confidence=v["confidence"],
                    model_version=v["model_version"],
                )
                for v in d["votes"]
            ),
            expert_label=d["expert_label"],
            resolver=Resolver(d["resolver"]),
        )


@dataclass(frozen=True)
class BackendCycleStats:
    backend_id: str
    version_before: int
    version_after: int
    train_loss_before: float
    train_loss_after: float


@dataclass(frozen=True)
class CycleRecord:
    cycle_index: int  # 1-based
    snapshot_size: int
    backends: tuple[BackendCycleStats, ...]
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "cycle_index": self.cycle_index,
            "snapshot_size": self.snapshot_size,
            "backends": [
                {
                    "backend_id": b.backend_id,
                    "version_before": b.version_before,
                    "version_after": b.version_after,
                    "train_loss_before": b.train_loss_before,
                    "train_loss_after": b.train_loss_after,
                }
                for b in self.backends
            ],
            "wall_time_s": self.wall_time_s,
        }

    @staticmethod
    def from_dict(d: dict) -> "CycleRecord":
        return CycleRecord(
            cycle_index=d["cycle_index"],
            snapshot_size=d["snapshot_size"],
            backends=tuple(
                BackendCycleStats(
                    backend_id=b["backend_id"],
                    version_before=b["version_before"],
                    version_after=b["version_after"],
                    train_loss_before=b["train_loss_before"],
                    train_loss_after=b["train_loss_after"],
                )
                for b in d["backends"]
            ),
            wall_time_s=d["wall_time_s"],
        )


class RefinementScheduler:
    """Owns the pool, the threshold trigger and the state machine.

    The driver loop is sequential: it pushes hard samples one at a time and,
    whenever push reports the trigger, calls run_cycle before pushing anything
    else. Pushing while a cycle runs is a programming error and raises.
    """

    def __init__(self, beta: int, hparams: Optional[RefineHparams] = None, clock: Callable[[], float] = time.monotonic):
        if beta < 1:
            raise InvalidInput(f"refinement threshold must be >= 1, got {beta}")
        self.beta = beta
        self.hparams = hparams or RefineHparams()
        self._clock = clock
        self.state = SchedulerState.ANNOTATING
        self.pool: list[HardSample] = []
        self.archive: list[HardSample] = []
        self.cycles: list[CycleRecord] = []
        self.transition_log: list[str] = [SchedulerState.ANNOTATING.value]

    def pool_size(self) -> int:
        return len(self.pool)

    def archived_total(self) -> int:
        """Samples consumed by completed cycles (survives checkpoint/resume)."""
        return sum(c.snapshot_size for c in self.cycles)

    def push(self, sample: HardSample) -> tuple[int, bool]:
        """Add one reviewed sample; returns (new pool size, trigger reached).

        Only legal while annotating: the driver must run the pending cycle
        before feeding the pool again, so the pool can never overshoot the
        threshold and every snapshot has exactly the threshold size.
        """
        if self.state is not SchedulerState.ANNOTATING:
            raise IllegalState(f"cannot push while {self.state.value}")
        if not isinstance(sample, HardSample):
            raise InvalidInput("pool entries must be HardSample instances")
        if not sample.expert_label:
            raise InvalidInput(f"sample {sample.sample_id!r} has no expert label")
        self.pool.append(sample)
        size = len(self.pool)
        triggered = size == self.beta
        if triggered:
            self.state = SchedulerState.REFINE_PENDING
        return size, triggered

    def run_cycle(self, registry: BackendRegistry) -> CycleRecord:
        """Execute one refinement cycle; all-or-nothing.

        On success the pool drains into the archive, every backend's version
        advances, and the committed transitions are appended to the log. On
        failure nothing is logged, the pool is intact, and state returns to
        refine_pending so the caller may retry.
        """
        if self.state is not SchedulerState.REFINE_PENDING:
            raise IllegalState(f"run_cycle requires refine_pending state, not {self.state.value}")
        if len(self.pool) != self.beta:
            raise IllegalState(
                f"run_cycle requires exactly {self.beta} pooled samples, have {len(self.pool)}"
            )

        snapshot = list(self.pool)
        wire_snapshot = [{"text": s.text, "label": s.expert_label} for s in snapshot]
        before = {b.backend_id: b.model_version for b in registry.backends()}

        self.state = SchedulerState.REFINING
        started = self._clock()
        try:
            responses = refine_all(wire_snapshot, self.hparams, registry)
        except (RefineFailed, InvalidInput):
            self.state = SchedulerState.REFINE_PENDING
            raise
        elapsed = self._clock() - started

        stats = tuple(
            BackendCycleStats(
                backend_id=desc.backend_id,
                version_before=before[desc.backend_id],
                version_after=resp.model_version,
                train_loss_before=resp.train_loss_before,
                train_loss_after=resp.train_loss_after,
            )
            for desc, resp in zip(registry.backends(), responses)
        )
        record = CycleRecord(
            cycle_index=len(self.cycles) + 1,
            snapshot_size=len(snapshot),
            backends=stats,
            wall_time_s=elapsed,
        )
        self.archive.extend(snapshot)
        self.pool.clear()
        self.cycles.append(record)
        self.state = SchedulerState.ANNOTATING
        self.transition_log.extend(
            [
                SchedulerState.REFINE_PENDING.value,
                SchedulerState.REFINING.value,
                SchedulerState.ANNOTATING.value,
            ]
        )
        return record

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "state": self.state.value,
            "pool": [s.to_dict() for s in self.pool],
            "archive_size": len(self.archive),
            "cycles": [c.to_dict() for c in self.cycles],
            "transition_log": list(self.transition_log),
        }

    def restore(self, d: dict) -> None:
        """Reload pool/cycle state from a checkpoint payload.

        A checkpoint is only ever written between batches, never mid-cycle,
        so the restored state is annotating or refine_pending.
        """
        if d["beta"] != self.beta:
            raise InvalidInput(f"checkpoint threshold {d['beta']} != configured {self.beta}")
        state = SchedulerState(d["state"])
        if state is SchedulerState.REFINING:
            raise InvalidInput("checkpoint captured mid-cycle state")
        self.state = state
        self.pool = [HardSample.from_dict(s) for s in d["pool"]]
        self.cycles = [CycleRecord.from_dict(c) for c in d["cycles"]]
        self.transition_log = list(d["transition_log"])
