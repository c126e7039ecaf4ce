"""Domain types and the pure consensus mathematics.

Everything in this module is a pure function over plain values: plurality
voting, the disagreement-based uncertainty metric, and the threshold routing
rule that decides whether a sample's vote stands or goes to expert review.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Optional, Sequence

from .errors import InvalidInput


def canonical_label(raw: str) -> str:
    """Canonical form of a label string: lowercased, surrounding whitespace trimmed.

    Idempotent: applying it twice gives the same result as applying it once.
    """
    return raw.strip().lower()


@dataclass(frozen=True)
class LabelSchema:
    """A closed, ordered label set for one annotation task.

    Labels are stored in canonical form; their position is the label index
    used everywhere else in the engine.
    """

    task_name: str
    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.task_name.strip():
            raise InvalidInput("schema task_name must be non-empty")
        canon = tuple(canonical_label(l) for l in self.labels)
        if not canon:
            raise InvalidInput("schema must declare at least one label")
        if any(not l for l in canon):
            raise InvalidInput("schema labels must be non-empty after normalization")
        if len(set(canon)) != len(canon):
            raise InvalidInput(f"schema labels must be unique, got {canon!r}")
        object.__setattr__(self, "labels", canon)

    def index_of(self, label: str) -> Optional[int]:
        """Index of a label given in any casing/padding, or None if unknown."""
        try:
            return self.labels.index(canonical_label(label))
        except ValueError:
            return None

    def name_of(self, index: int) -> str:
        return self.labels[index]

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class Sample:
    """One unit of text to annotate. ``gold_label`` is evaluation-only."""

    id: str
    text: str
    gold_label: Optional[int] = None

    def __post_init__(self):
        if not self.id:
            raise InvalidInput("sample id must be non-empty")
        if not self.text.strip():
            raise InvalidInput(f"sample {self.id!r} has empty text")


@dataclass(frozen=True)
class Prediction:
    """A single backend's answer for one sample."""

    backend_id: str
    label: int
    confidence: float
    model_version: int

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise InvalidInput(f"confidence {self.confidence} outside [0, 1]")
        if self.model_version < 0:
            raise InvalidInput("model_version must be non-negative")
        if self.label < 0:
            raise InvalidInput("label index must be non-negative")


class Route(Enum):
    DIRECT = "direct"
    REVIEW = "review"


class RouteReason(Enum):
    CONSENSUS = "consensus"
    DISAGREEMENT = "disagreement"
    TIE = "tie"
    BACKEND_FAILURE = "backend_failure"


class ReviewMode(Enum):
    LLM = "llm"
    HUMAN = "human"
    HUMAN_OVERRIDES_LLM = "human_overrides_llm"


@dataclass(frozen=True)
class VoteOutcome:
    """The full result of putting one sample through the vote.

    ``winner`` is None exactly when the plurality is tied; tied outcomes are
    always routed to review. ``failed_backends`` lists backends that produced
    no prediction; any failure forces review as well.
    """

    sample_id: str
    predictions: tuple[Prediction, ...]
    winner: Optional[int]
    winner_count: int
    uncertainty: float
    route: Route
    route_reason: RouteReason
    failed_backends: tuple[str, ...] = ()


@dataclass
class RefineHparams:
    learning_rate: float = 2e-5
    weight_decay: float = 0.01
    epochs: int = 3

    def __post_init__(self):
        if self.learning_rate <= 0 or self.weight_decay < 0 or self.epochs < 0:
            raise InvalidInput("refine hyperparameters must be positive (epochs may be 0)")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "weight_decay": self.weight_decay,
            "epochs": self.epochs,
        }


@dataclass
class RunConfig:
    """Knobs for a full annotation run. Defaults mirror the reference setup."""

    k: int = 3
    epsilon: float = 0.3
    beta: int = 2000
    review_mode: ReviewMode = ReviewMode.LLM
    refine: RefineHparams = field(default_factory=RefineHparams)
    seed: int = 0
    batch_size: int = 32
    backend_timeout: float = 10.0
    backend_retries: int = 2
    review_max_attempts: int = 3
    fanout_parallelism: int = 8
    wall_clock_timestamps: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInput("k must be >= 1")
        if not (0.0 < self.epsilon <= 1.0):
            raise InvalidInput("epsilon must be in (0, 1]")
        if self.beta < 1:
            raise InvalidInput("beta must be >= 1")
        if self.batch_size < 1:
            raise InvalidInput("batch_size must be >= 1")
        if self.review_max_attempts < 1:
            raise InvalidInput("review_max_attempts must be >= 1")
        if self.backend_retries < 0:
            raise InvalidInput("backend_retries must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["review_mode"] = self.review_mode.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "review_mode" in d:
            d["review_mode"] = ReviewMode(d["review_mode"])
        if isinstance(d.get("refine"), dict):
            d["refine"] = RefineHparams(**d["refine"])
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def majority_vote(predictions: Sequence[int], schema: LabelSchema) -> tuple[Optional[int], int]:
    """Plurality winner of a list of label indices.

    Returns ``(winner, count)`` where ``count`` is the maximum multiplicity.
    ``winner`` is None when two or more labels tie for that maximum.
    """
    if not predictions:
        raise InvalidInput("majority_vote requires at least one prediction")
    n_labels = len(schema)
    for p in predictions:
        if not (0 <= p < n_labels):
            raise InvalidInput(f"label index {p} out of range for schema with {n_labels} labels")
    counts = Counter(predictions)
    top = counts.most_common()
    best_count = top[0][1]
    leaders = [label for label, c in top if c == best_count]
    if len(leaders) > 1:
        return None, best_count
    return leaders[0], best_count


def uncertainty(predictions: Sequence[int], k: int) -> float:
    """Disagreement metric: 1 minus the normalized maximum vote multiplicity.

    0 means unanimity; the maximum attainable value is 1 - 1/k. Defined only
    for exactly k predictions.
    """
    if k < 1:
        raise InvalidInput("k must be >= 1")
    if len(predictions) != k:
        raise InvalidInput(f"expected exactly {k} predictions, got {len(predictions)}")
    max_count = max(Counter(predictions).values())
    return 1.0 - max_count / k


def route(outcome_uncertainty: float, winner_present: bool, epsilon: float) -> Route:
    """Threshold routing: direct labeling iff a winner exists and U < epsilon.

    Ties (no winner) go to review for every epsilon.
    """
    if not (0.0 < epsilon <= 1.0):
        raise InvalidInput("epsilon must be in (0, 1]")
    if not (0.0 <= outcome_uncertainty <= 1.0):
        raise InvalidInput("uncertainty must be in [0, 1]")
    if winner_present and outcome_uncertainty < epsilon:
        return Route.DIRECT
    return Route.REVIEW


def build_vote_outcome(
    sample_id: str,
    predictions: Sequence[Prediction],
    k: int,
    epsilon: float,
    schema: LabelSchema,
    failed_backends: Sequence[str] = (),
) -> VoteOutcome:
    """Compose vote, uncertainty and routing into one outcome record.

    When any backend failed to answer, the uncertainty is still computed over
    the full k (missing votes cannot agree with anything), the winner is the
    plurality of the answers that did arrive, and the sample is review-routed
    unconditionally with reason BACKEND_FAILURE.
    """
    if len(predictions) + len(failed_backends) != k:
        raise InvalidInput(
            f"sample {sample_id!r}: {len(predictions)} predictions + "
            f"{len(failed_backends)} failures != k={k}"
        )
    if not predictions:
        raise InvalidInput(f"sample {sample_id!r}: no backend produced a prediction")

    labels = [p.label for p in predictions]
    winner, winner_count = majority_vote(labels, schema)
    u = 1.0 - winner_count / k

    if failed_backends:
        r, reason = Route.REVIEW, RouteReason.BACKEND_FAILURE
    else:
        r = route(u, winner is not None, epsilon)
        if r is Route.DIRECT:
            reason = RouteReason.CONSENSUS
        elif winner is None:
            reason = RouteReason.TIE
        else:
            reason = RouteReason.DISAGREEMENT

    return VoteOutcome(
        sample_id=sample_id,
        predictions=tuple(predictions),
        winner=winner,
        winner_count=winner_count,
        uncertainty=u,
        route=r,
        route_reason=reason,
        failed_backends=tuple(failed_backends),
    )
