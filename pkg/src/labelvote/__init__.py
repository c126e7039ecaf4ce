"""Committee-of-specialists text annotation with uncertainty-routed review.

Small fine-tuned models vote on every sample; confident agreement is accepted
directly, disagreement goes to an expert (LLM or human), and reviewed samples
periodically fine-tune the committee.
"""
from .checkpoint import payload_checksum, read_checkpoint, write_checkpoint
from .core import (
    LabelSchema,
    Prediction,
    RefineHparams,
    ReviewMode,
    Route,
    RouteReason,
    RunConfig,
    Sample,
    VoteOutcome,
    build_vote_outcome,
    majority_vote,
    route,
    uncertainty,
)
from .costs import (
    CostLedger,
    PriceEntry,
    PriceTable,
    estimate_cost,
    estimate_cost_pico,
    format_usd,
    pico_to_usd,
    reduction_percent,
    tokens_cost_pico,
)
from .errors import (
    BackendUnavailable,
    ChecksumError,
    DuplicateBackend,
    FanoutFailed,
    IllegalState,
    IngestError,
    InsufficientCandidates,
    InvalidInput,
    LabelMapError,
    LabelvoteError,
    LlmUnavailable,
    RefineFailed,
    SelectionParseError,
    SelectionSourceUnavailable,
    TemplateError,
    UnresolvedSample,
)
from .gateway import (
    Backend,
    BackendRegistry,
    HealthInfo,
    HttpBackend,
    WirePredictResponse,
    WireRefineResponse,
    predict_fanout,
    refine_all,
)
from .ingest import load_csv, load_jsonl, load_samples
from .llm import ChatMessage, ChatResponse, HttpChatClient, LlmEndpointConfig, ScriptedChatClient
from .meta import (
    ExpertLabel,
    LocalCatalog,
    ModelCandidate,
    Resolver,
    normalize_response,
    review_sample,
    search_candidates,
    select_models,
)
from .refinement import CycleRecord, HardSample, RefinementScheduler, SchedulerState
from .runner import (
    AnnotationRun,
    Counters,
    LlmReviewer,
    OutputRecord,
    Source,
    load_run_view,
    read_output,
    report,
)
from .service import HumanReviewQueue, HumanReviewer, HybridReviewer, ReviewService
from .stubs import NoisyBackend, ScriptedBackend
from .sweep import run_sweep, stub_world

__version__ = "0.1.0"

__all__ = [
    "AnnotationRun",
    "Backend",
    "BackendRegistry",
    "BackendUnavailable",
    "ChatMessage",
    "ChatResponse",
    "ChecksumError",
    "CostLedger",
    "Counters",
    "CycleRecord",
    "DuplicateBackend",
    "ExpertLabel",
    "FanoutFailed",
    "HardSample",
    "HealthInfo",
    "HttpBackend",
    "HttpChatClient",
    "HumanReviewQueue",
    "HumanReviewer",
    "HybridReviewer",
    "IllegalState",
    "IngestError",
    "InsufficientCandidates",
    "InvalidInput",
    "LabelMapError",
    "LabelSchema",
    "LabelvoteError",
    "LlmEndpointConfig",
    "LlmReviewer",
    "LlmUnavailable",
    "LocalCatalog",
    "ModelCandidate",
    "NoisyBackend",
    "OutputRecord",
    "Prediction",
    "PriceEntry",
    "PriceTable",
    "RefineFailed",
    "RefineHparams",
    "RefinementScheduler",
    "Resolver",
    "ReviewMode",
    "ReviewService",
    "Route",
    "RouteReason",
    "RunConfig",
    "Sample",
    "SchedulerState",
    "ScriptedBackend",
    "ScriptedChatClient",
    "SelectionParseError",
    "SelectionSourceUnavailable",
    "Source",
    "TemplateError",
    "UnresolvedSample",
    "VoteOutcome",
    "WirePredictResponse",
    "WireRefineResponse",
    "build_vote_outcome",
    "estimate_cost",
    "estimate_cost_pico",
    "format_usd",
    "load_csv",
    "load_jsonl",
    "load_run_view",
    "load_samples",
    "majority_vote",
    "normalize_response",
    "payload_checksum",
    "pico_to_usd",
    "predict_fanout",
    "read_checkpoint",
    "read_output",
    "reduction_percent",
    "refine_all",
    "report",
    "review_sample",
    "route",
    "run_sweep",
    "search_candidates",
    "select_models",
    "stub_world",
    "tokens_cost_pico",
    "uncertainty",
    "write_checkpoint",
]
