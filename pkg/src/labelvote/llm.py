"""Chat-completion transport.

Two implementations of one small interface: a scripted in-memory client so
the whole test suite runs offline, and an HTTP client speaking the common
OpenAI-style ``/chat/completions`` shape. Every issued request, including
retries, is reported to the cost ledger when one is attached.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence, Union

import requests

from .costs import CostLedger
from .errors import LlmUnavailable


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class ChatResponse:
    content: str
    input_tokens: int
    output_tokens: int


class ChatClient(Protocol):
    provider: str

    def complete(self, messages: Sequence[ChatMessage], temperature: float = 0.0) -> ChatResponse:
        ...


@dataclass
class LlmEndpointConfig:
    """Where and how to reach the real LLM. Secrets stay in the environment."""

    model: str = "gpt-3.5-turbo"
    provider: str = "openai"
    base_url_env: str = "LLM_BASE_URL"
    api_key_env: str = "LLM_API_KEY"
    timeout: float = 30.0
    max_retries: int = 2
    temperature: float = 0.0

    def base_url(self) -> str:
        url = os.environ.get(self.base_url_env, "")
        if not url:
            raise LlmUnavailable(f"environment variable {self.base_url_env} is not set")
        return url.rstrip("/")

    def api_key(self) -> str:
        return os.environ.get(self.api_key_env, "")


class HttpChatClient:
    """OpenAI-compatible chat client with bounded retries and usage reporting."""

    def __init__(
        self,
        config: LlmEndpointConfig,
        ledger: Optional[CostLedger] = None,
        category: str = "review",
        session: Optional[requests.Session] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.provider = config.provider
        self.ledger = ledger
        self.category = category
        self._session = session or requests.Session()
        self._sleep = sleep

    def complete(self, messages: Sequence[ChatMessage], temperature: float = 0.0) -> ChatResponse:
        body = {
            "model": self.config.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": temperature,
        }
        headers = {"Content-Type": "application/json"}
        key = self.config.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        url = f"{self.config.base_url()}/chat/completions"

        last_error: Optional[Exception] = None
        for attempt in range(self.config.max_retries + 1):
            try:
                resp = self._session.post(url, json=body, headers=headers, timeout=self.config.timeout)
                resp.raise_for_status()
                data = resp.json()
                content = data["choices"][0]["message"]["content"]
                usage = data.get("usage", {})
                result = ChatResponse(
                    content=content,
                    input_tokens=int(usage.get("prompt_tokens", 0)),
                    output_tokens=int(usage.get("completion_tokens", 0)),
                )
                self._record(result.input_tokens, result.output_tokens)
                return result
            except (requests.RequestException, KeyError, ValueError) as exc:
                # A request went out even if it failed; parity demands we count it.
                self._record(0, 0)
                last_error = exc
                if attempt < self.config.max_retries:
                    self._sleep(min(2.0 ** attempt, 8.0))
        raise LlmUnavailable(f"chat completion failed after {self.config.max_retries + 1} attempts: {last_error}")

    def _record(self, input_tokens: int, output_tokens: int) -> None:
        if self.ledger is not None:
            self.ledger.record(
                self.provider,
                input_tokens=input_tokens,
                output_tokens=output_tokens,
                calls=1,
                category=self.category,
            )


ReplySource = Union[str, Callable[[Sequence[ChatMessage]], str]]


class ScriptedChatClient:
    """Deterministic in-memory chat client for offline runs and tests.

    ``script`` may be a list of canned replies consumed in order, or a single
    callable invoked with the message list. Each reply charges a fixed token
    profile so ledger math stays predictable.
    """

    def __init__(
        self,
        script: Union[Sequence[str], Callable[[Sequence[ChatMessage]], str]],
        provider: str = "scripted",
        ledger: Optional[CostLedger] = None,
        category: str = "review",
        input_tokens_per_call: int = 0,
        output_tokens_per_call: int = 0,
    ):
        self.provider = provider
        self.ledger = ledger
        self.category = category
        self.input_tokens_per_call = input_tokens_per_call
        self.output_tokens_per_call = output_tokens_per_call
        self.calls = 0
        self.transcript: list[tuple[ChatMessage, ...]] = []
        if callable(script):
            self._fn: Optional[Callable[[Sequence[ChatMessage]], str]] = script
            self._replies: list[str] = []
        else:
            self._fn = None
            self._replies = list(script)

    def complete(self, messages: Sequence[ChatMessage], temperature: float = 0.0) -> ChatResponse:
        self.transcript.append(tuple(messages))
        if self._fn is not None:
            content = self._fn(messages)
        else:
            if self.calls >= len(self._replies):
                raise LlmUnavailable(f"scripted client exhausted after {self.calls} replies")
            content = self._replies[self.calls]
        self.calls += 1
        if self.ledger is not None:
            self.ledger.record(
                self.provider,
                input_tokens=self.input_tokens_per_call,
                output_tokens=self.output_tokens_per_call,
                calls=1,
                category=self.category,
            )
        return ChatResponse(
            content=content,
            input_tokens=self.input_tokens_per_call,
            output_tokens=self.output_tokens_per_call,
        )
