"""Meta-controller: model selection over a hub catalog and expert review.

The LLM does two jobs here. First, given a shortlist of candidate models from
a hub search (or a local catalog file), it ranks them and we keep the top k.
Second, it acts as the expert reviewer for samples the specialist pool could
not agree on: it sees the task's review prompt plus the raw sample text and
must answer with a label from the schema.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Protocol, Sequence, Union

import requests

from .core import LabelSchema, Sample
from .errors import (
    InsufficientCandidates,
    InvalidInput,
    SelectionParseError,
    SelectionSourceUnavailable,
    UnresolvedSample,
)
from .llm import ChatClient, ChatMessage
from .prompts import TEMPLATES, STRICTNESS_SUFFIX, render_prompt, review_prompt_for


@dataclass(frozen=True)
class ModelCandidate:
    model_id: str
    description: str = ""
    downloads: int = 0
    parameter_count: Optional[str] = None
    task_tag: str = ""


class Resolver(Enum):
    LLM = "llm"
    HUMAN = "human"


@dataclass(frozen=True)
class ExpertLabel:
    sample_id: str
    label: int
    resolver: Resolver
    raw_response: str
    attempts: int


# --- candidate search --------------------------------------------------------

class HubClient(Protocol):
    def search(self, query: str, limit: int) -> list[ModelCandidate]:
        ...


class HttpHubClient:
    """GET against a model-index endpoint with query and limit parameters."""

    def __init__(self, base_url: str, timeout: float = 15.0, session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()

    def search(self, query: str, limit: int) -> list[ModelCandidate]:
        try:
            resp = self._session.get(
                f"{self.base_url}/api/models",
                params={"search": query, "limit": limit},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            rows = resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise SelectionSourceUnavailable(f"hub search failed: {exc}") from exc
        return [_candidate_from_row(row) for row in rows]


def _candidate_from_row(row: dict) -> ModelCandidate:
    model_id = row.get("model_id") or row.get("modelId") or row.get("id")
    if not model_id:
        raise SelectionSourceUnavailable(f"catalog row without a model id: {row!r}")
    return ModelCandidate(
        model_id=model_id,
        description=row.get("description", ""),
        downloads=int(row.get("downloads", 0)),
        parameter_count=row.get("parameter_count") or row.get("parameters"),
        task_tag=row.get("task_tag") or row.get("pipeline_tag", ""),
    )


class LocalCatalog:
    """A JSON file of candidate rows, used when no hub is reachable."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        if not self.path.exists():
            raise SelectionSourceUnavailable(f"catalog file not found: {self.path}")
        self._rows = json.loads(self.path.read_text(encoding="utf-8"))

    def search(self, query: str, limit: int) -> list[ModelCandidate]:
        matches = []
        needle = query.lower()
        for row in self._rows:
            cand = _candidate_from_row(row)
            haystack = " ".join([cand.model_id, cand.description, cand.task_tag]).lower()
            if not needle or needle in haystack:
                matches.append(cand)
        return matches[:limit] if limit else matches


def search_candidates(
    task: Union[str, LabelSchema], hub_client: HubClient, max_candidates: int = 50
) -> list[ModelCandidate]:
    """Pre-filter stage: hub search, deduplicated, most-downloaded first."""
    query = task if isinstance(task, str) else task.task_name
    found = hub_client.search(query, max_candidates)
    seen: dict[str, ModelCandidate] = {}
    for cand in found:
        if cand.model_id not in seen:
            seen[cand.model_id] = cand
    ranked = sorted(seen.values(), key=lambda c: (-c.downloads, c.model_id))
    return ranked[:max_candidates]


# --- LLM ranking -------------------------------------------------------------

def _parse_id_list(text: str, known: set[str]) -> list[str]:
    """Pull an ordered list of known model ids out of a free-form reply.

    Accepts one id per line or comma-separated, tolerating bullets and
    numbering. Any token that is not a known id invalidates the reply.
    """
    ids: list[str] = []
    for chunk in re.split(r"[\n,]+", text):
        token = chunk.strip().strip("-*").strip()
        token = re.sub(r"^\d+[.)]\s*", "", token).strip().strip("\"'`")
        if not token:
            continue
        if token not in known:
            raise SelectionParseError(f"unknown model id in reply: {token!r}")
        if token not in ids:
            ids.append(token)
    return ids


def select_models(
    task: LabelSchema,
    candidates: Sequence[ModelCandidate],
    llm_client: ChatClient,
    k: int,
) -> list[ModelCandidate]:
    """Ask the LLM to rank the candidates and keep the top k, in its order."""
    if k < 1:
        raise InvalidInput("k must be >= 1")
    if len(candidates) < k:
        raise InsufficientCandidates(f"need {k} candidates, have {len(candidates)}")

    by_id = {c.model_id: c for c in candidates}
    listing = "\n".join(f"{c.model_id}: {c.description}" for c in candidates)
    prompt = render_prompt(
        TEMPLATES["model_ranking"],
        {
            "task_name": task.task_name,
            "labels": ", ".join(task.labels),
            "candidates": listing,
            "k": str(k),
        },
    )
    messages = [ChatMessage("user", prompt)]

    last_error: Optional[SelectionParseError] = None
    for attempt in range(2):
        reply = llm_client.complete(messages, temperature=0.0)
        try:
            ordered = _parse_id_list(reply.content, set(by_id))
            if len(ordered) < k:
                raise SelectionParseError(f"reply names {len(ordered)} ids, need {k}")
            return [by_id[i] for i in ordered[:k]]
        except SelectionParseError as exc:
            last_error = exc
            messages = messages + [
                ChatMessage("assistant", reply.content),
                ChatMessage("user", "Reply with candidate model ids only, one per line, best first."),
            ]
    raise last_error  # type: ignore[misc]


# --- expert review -----------------------------------------------------------

_TERMINAL_PUNCT = ".!?;:,"


def normalize_response(text: str) -> str:
    """Lowercase, trim, strip terminal punctuation. Idempotent."""
    out = text.strip().lower()
    while out and out[-1] in _TERMINAL_PUNCT:
        out = out[:-1].rstrip()
    return out


def review_sample(
    sample: Sample,
    schema: LabelSchema,
    llm_client: ChatClient,
    max_attempts: int = 3,
) -> ExpertLabel:
    """Resolve one review-routed sample through the expert LLM.

    Sends the task's review prompt as the system message and the sample text
    as the user message. A reply that does not normalize to a schema label
    gets one strictness reminder appended per retry; when every attempt fails
    the sample is reported unresolved and the pipeline decides the fallback.
    """
    if max_attempts < 1:
        raise InvalidInput("max_attempts must be >= 1")
    system = review_prompt_for(schema)
    messages = [ChatMessage("system", system), ChatMessage("user", sample.text)]

    raw = ""
    for attempt in range(1, max_attempts + 1):
        reply = llm_client.complete(messages, temperature=0.0)
        raw = reply.content
        label = schema.index_of(normalize_response(raw))
        if label is not None:
            return ExpertLabel(
                sample_id=sample.id,
                label=label,
                resolver=Resolver.LLM,
                raw_response=raw,
                attempts=attempt,
            )
        messages = messages + [
            ChatMessage("assistant", raw),
            ChatMessage("user", STRICTNESS_SUFFIX),
        ]
    raise UnresolvedSample(sample.id, max_attempts, raw)
