"""Shared test servers: tiny HTTP wrappers around in-process fakes."""
from __future__ import annotations

import json
import threading
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from labelvote.core import RefineHparams
from labelvote.errors import BackendUnavailable


class _Silent(BaseHTTPRequestHandler):
    def log_message(self, fmt, *args):
        pass

    def reply(self, status: int, payload) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def body(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        return json.loads(self.rfile.read(length) or b"{}")


def _backend_handler(backend):
    class Handler(_Silent):
        def do_GET(self):
            if self.path == "/v1/health":
                try:
                    info = backend.health()
                except BackendUnavailable as exc:
                    return self.reply(503, {"status": "error", "detail": str(exc)})
                return self.reply(
                    200,
                    {
                        "status": "ok",
                        "model_id": info.model_id,
                        "model_version": info.model_version,
                        "labels": list(info.labels),
                    },
                )
            self.reply(404, {"error": self.path})

        def do_POST(self):
            payload = self.body()
            if self.path == "/v1/predict":
                try:
                    resp = backend.predict(payload["texts"])
                except BackendUnavailable as exc:
                    return self.reply(503, {"error": str(exc)})
                return self.reply(
                    200,
                    {
                        "model_version": resp.model_version,
                        "predictions": [
                            {"label": p.label, "confidence": p.confidence}
                            for p in resp.predictions
                        ],
                    },
                )
            if self.path == "/v1/refine":
                try:
                    resp = backend.refine(
                        payload["samples"], RefineHparams(**payload["hyperparams"])
                    )
                except BackendUnavailable as exc:
                    return self.reply(503, {"error": str(exc)})
                return self.reply(
                    200,
                    {
                        "model_version": resp.model_version,
                        "train_loss_before": resp.train_loss_before,
                        "train_loss_after": resp.train_loss_after,
                    },
                )
            self.reply(404, {"error": self.path})

    return Handler


@contextmanager
def serve_backend(backend):
    """Expose an in-process backend over the wire protocol; yields its URL."""
    server = ThreadingHTTPServer(("127.0.0.1", 0), _backend_handler(backend))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        server.server_close()


def _chat_handler(replies: list[str], fail_first: int = 0, usage=(7, 2)):
    state = {"calls": 0, "fails_left": fail_first}

    class Handler(_Silent):
        def do_POST(self):
            if self.path != "/chat/completions":
                return self.reply(404, {"error": self.path})
            self.body()
            if state["fails_left"] > 0:
                state["fails_left"] -= 1
                return self.reply(500, {"error": "transient"})
            i = min(state["calls"], len(replies) - 1)
            state["calls"] += 1
            return self.reply(
                200,
                {
                    "choices": [{"message": {"role": "assistant", "content": replies[i]}}],
                    "usage": {"prompt_tokens": usage[0], "completion_tokens": usage[1]},
                },
            )

    return Handler, state


@contextmanager
def serve_chat(replies: list[str], fail_first: int = 0, usage=(7, 2)):
    """OpenAI-shaped chat endpoint answering from a canned list; yields (url, state)."""
    handler, state = _chat_handler(replies, fail_first, usage)
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}", state
    finally:
        server.shutdown()
        server.server_close()


def _hub_handler(rows: list[dict]):
    class Handler(_Silent):
        def do_GET(self):
            if not self.path.startswith("/api/models"):
                return self.reply(404, {"error": self.path})
            return self.reply(200, rows)

    return Handler


@contextmanager
def serve_hub(rows: list[dict]):
    server = ThreadingHTTPServer(("127.0.0.1", 0), _hub_handler(rows))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        server.server_close()
