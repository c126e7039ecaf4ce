"""HTTP face of the worker: the three-endpoint annotation wire protocol.

GET  /v1/health   -> {"status": "ok", "model_id", "model_version", "labels"}
POST /v1/predict  {"texts": [...]} -> {"model_version", "predictions": [...]}
POST /v1/refine   {"samples": [...], "hyperparams": {...}} -> version + losses

Malformed bodies are 400, validation failures (unknown label, empty pool) are
422 and leave the model untouched, and a second refine while one is running
is 409. Predictions run concurrently; only refines are serialized.
"""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .engine import WorkerError


class WorkerServer:
    def __init__(self, engine, host: str = "127.0.0.1", port: int = 0):
        self.engine = engine
        handler = _make_handler(engine, threading.Lock())
        self._server = ThreadingHTTPServer((host, port), handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def start(self) -> "WorkerServer":
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()


def _make_handler(engine, refine_lock: threading.Lock):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            pass

        def _json(self, status: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _body(self):
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length)
            try:
                parsed = json.loads(raw or b"")
            except json.JSONDecodeError:
                return None
            return parsed if isinstance(parsed, dict) else None

        def do_GET(self):
            if self.path.split("?", 1)[0] == "/v1/health":
                return self._json(
                    200,
                    {
                        "status": "ok",
                        "model_id": engine.model_id,
                        "model_version": engine.model_version,
                        "labels": list(engine.labels),
                    },
                )
            return self._json(404, {"error": f"unknown path {self.path}"})

        def do_POST(self):
            path = self.path.split("?", 1)[0]
            if path == "/v1/predict":
                return self._predict()
            if path == "/v1/refine":
                return self._refine()
            return self._json(404, {"error": f"unknown path {path}"})

        def _predict(self):
            body = self._body()
            if body is None:
                return self._json(400, {"error": "body must be a JSON object"})
            texts = body.get("texts")
            if not isinstance(texts, list) or any(not isinstance(t, str) for t in texts):
                return self._json(400, {"error": "'texts' must be a list of strings"})
            preds = engine.predict(texts)
            return self._json(
                200,
                {
                    "model_version": engine.model_version,
                    "predictions": [
                        {"label": label, "confidence": confidence}
                        for label, confidence in preds
                    ],
                },
            )

        def _refine(self):
            body = self._body()
            if body is None:
                return self._json(400, {"error": "body must be a JSON object"})
            samples = body.get("samples")
            if not isinstance(samples, list) or any(
                not isinstance(s, dict)
                or not isinstance(s.get("text"), str)
                or not isinstance(s.get("label"), str)
                for s in samples
            ):
                return self._json(
                    400, {"error": "'samples' must be a list of {text, label} objects"}
                )
            if not samples:
                return self._json(422, {"error": "refine needs a non-empty sample list"})
            hp = body.get("hyperparams", {})
            if not isinstance(hp, dict):
                return self._json(400, {"error": "'hyperparams' must be an object"})
            try:
                kwargs = {
                    "learning_rate": float(hp.get("learning_rate", 2e-5)),
                    "weight_decay": float(hp.get("weight_decay", 0.01)),
                    "epochs": int(hp.get("epochs", 3)),
                }
            except (TypeError, ValueError):
                return self._json(400, {"error": "hyperparams must be numeric"})

            if not refine_lock.acquire(blocking=False):
                return self._json(409, {"error": "a refine is already in flight"})
            try:
                result = engine.refine(samples, **kwargs)
            except WorkerError as exc:
                return self._json(422, {"error": str(exc)})
            finally:
                refine_lock.release()
            return self._json(200, result)

    return Handler
