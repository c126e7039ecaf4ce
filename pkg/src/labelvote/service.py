"""HTTP face of a running annotation job.

Exposes run status, the label schema, and the human review loop: the runner
blocks on ``HumanReviewQueue`` whenever a disputed sample needs a person,
while this service hands the pending item to a browser and posts the decision
back. The server runs in a daemon thread next to the annotation thread.
"""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional, Sequence

from .core import LabelSchema, Sample, VoteOutcome, canonical_label
from .errors import UnresolvedSample
from .meta import ExpertLabel, Resolver
from .runner import AnnotationRun, LlmReviewer


class PendingReview:
    def __init__(
        self,
        sample_id: str,
        text: str,
        votes: Sequence[dict],
        uncertainty: float,
        suggestion: Optional[str] = None,
    ):
        self.sample_id = sample_id
        self.text = text
        self.votes = list(votes)
        self.uncertainty = uncertainty
        self.suggestion = suggestion

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "text": self.text,
            "votes": self.votes,
            "uncertainty": self.uncertainty,
            "suggestion": self.suggestion,
        }


class HumanReviewQueue:
    """Hands pending reviews to the HTTP side and decisions back to the runner.

    The annotation thread blocks in ``submit_for_review`` until somebody calls
    ``resolve`` for that sample. The runner reviews one sample at a time, but
    the queue supports several pending items to stay honest under races.
    """

    def __init__(self):
        self._cond = threading.Condition()
        self._pending: dict[str, PendingReview] = {}
        self._order: list[str] = []
        self._results: dict[str, int] = {}

    def submit_for_review(self, item: PendingReview, timeout: Optional[float] = None) -> int:
        with self._cond:
            self._pending[item.sample_id] = item
            self._order.append(item.sample_id)
            self._cond.notify_all()
            ok = self._cond.wait_for(lambda: item.sample_id in self._results, timeout=timeout)
            self._order.remove(item.sample_id)
            self._pending.pop(item.sample_id, None)
            if not ok:
                raise UnresolvedSample(item.sample_id, 1, "human review timed out")
            return self._results.pop(item.sample_id)

    def peek_next(self) -> Optional[PendingReview]:
        with self._cond:
            for sample_id in self._order:
                if sample_id not in self._results:
                    return self._pending[sample_id]
            return None

    def resolve(self, sample_id: str, label_index: int) -> bool:
        """Record a decision; False when the sample is not awaiting review."""
        with self._cond:
            if sample_id not in self._pending or sample_id in self._results:
                return False
            self._results[sample_id] = label_index
            self._cond.notify_all()
            return True

    def pending_count(self) -> int:
        with self._cond:
            return len(self._pending)


def _votes_payload(outcome: VoteOutcome, schema: LabelSchema) -> list[dict]:
    return [
        {
            "backend_id": p.backend_id,
            "label": schema.name_of(p.label),
            "confidence": p.confidence,
        }
        for p in outcome.predictions
    ]


class HumanReviewer:
    """Blocks the run until a human posts a label through the service."""

    def __init__(self, queue: HumanReviewQueue, schema: LabelSchema, timeout: Optional[float] = None):
        self.queue = queue
        self.schema = schema
        self.timeout = timeout

    def review(self, sample: Sample, outcome: VoteOutcome) -> ExpertLabel:
        item = PendingReview(
            sample.id, sample.text, _votes_payload(outcome, self.schema), outcome.uncertainty
        )
        label = self.queue.submit_for_review(item, timeout=self.timeout)
        return ExpertLabel(
            sample_id=sample.id,
            label=label,
            resolver=Resolver.HUMAN,
            raw_response=self.schema.name_of(label),
            attempts=1,
        )


class HybridReviewer:
    """LLM proposes, human disposes.

    The language model's answer rides along as a suggestion on the review
    item; the posted human label is always final and the record counts as a
    human review.
    """

    def __init__(
        self,
        llm: LlmReviewer,
        queue: HumanReviewQueue,
        schema: LabelSchema,
        timeout: Optional[float] = None,
    ):
        self.llm = llm
        self.queue = queue
        self.schema = schema
        self.timeout = timeout

    def review(self, sample: Sample, outcome: VoteOutcome) -> ExpertLabel:
        suggestion: Optional[str] = None
        try:
            suggestion = self.schema.name_of(self.llm.review(sample, outcome).label)
        except UnresolvedSample:
            pass
        item = PendingReview(
            sample.id,
            sample.text,
            _votes_payload(outcome, self.schema),
            outcome.uncertainty,
            suggestion=suggestion,
        )
        label = self.queue.submit_for_review(item, timeout=self.timeout)
        return ExpertLabel(
            sample_id=sample.id,
            label=label,
            resolver=Resolver.HUMAN,
            raw_response=self.schema.name_of(label),
            attempts=1,
        )


class ReviewService:
    """Threaded HTTP server for status, schema, review traffic and the UI."""

    def __init__(
        self,
        run: AnnotationRun,
        queue: Optional[HumanReviewQueue] = None,
        host: str = "127.0.0.1",
        port: int = 0,
        static_dir: Optional[Path] = None,
    ):
        self.run = run
        self.queue = queue
        self.static_dir = Path(static_dir).resolve() if static_dir else None
        handler = _make_handler(run, queue, run.schema, self.static_dir)
        self._server = ThreadingHTTPServer((host, port), handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def start(self) -> "ReviewService":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()


_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript",
    ".css": "text/css",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}


def _make_handler(run, queue, schema, static_dir):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # keep test output clean
            pass

        def _json(self, status: int, payload) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            path = self.path.split("?", 1)[0]
            if path == "/api/status":
                return self._json(200, run.status_payload())
            if path == "/api/schema":
                return self._json(
                    200, {"task_name": schema.task_name, "labels": list(schema.labels)}
                )
            if path == "/api/review/next":
                if queue is None:
                    return self._json(404, {"error": "run has no human review queue"})
                item = queue.peek_next()
                if item is None:
                    self.send_response(204)
                    self.send_header("Content-Length", "0")
                    self.end_headers()
                    return
                return self._json(200, item.to_dict())
            if static_dir is not None and not path.startswith("/api/"):
                return self._static(path)
            return self._json(404, {"error": f"unknown path {path}"})

        def do_POST(self):
            path = self.path.split("?", 1)[0]
            if not path.startswith("/api/review/"):
                return self._json(404, {"error": f"unknown path {path}"})
            if queue is None:
                return self._json(404, {"error": "run has no human review queue"})
            sample_id = path[len("/api/review/") :]
            try:
                length = int(self.headers.get("Content-Length", "0"))
                body = json.loads(self.rfile.read(length) or b"{}")
            except (ValueError, json.JSONDecodeError):
                return self._json(400, {"error": "body must be JSON"})
            label = body.get("label")
            if not isinstance(label, str):
                return self._json(422, {"error": "body needs a string 'label' field"})
            index = schema.index_of(canonical_label(label))
            if index is None:
                return self._json(
                    422,
                    {"error": f"label {label!r} not in schema", "labels": list(schema.labels)},
                )
            if not queue.resolve(sample_id, index):
                return self._json(404, {"error": f"sample {sample_id!r} is not awaiting review"})
            return self._json(200, {"ok": True, "sample_id": sample_id, "label": schema.name_of(index)})

        def _static(self, path: str) -> None:
            rel = path.lstrip("/") or "index.html"
            target = (static_dir / rel).resolve()
            if not str(target).startswith(str(static_dir)) or not target.is_file():
                return self._json(404, {"error": f"no such file {path}"})
            body = target.read_bytes()
            self.send_response(200)
            self.send_header(
                "Content-Type", _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
            )
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler
