"""Specialist-backend boundary: registry, wire protocol, fan-out, refinement.

Backends are anything that answers the three-endpoint wire contract
(health/predict/refine), reached either in-process through the ``Backend``
protocol or over HTTP. The registry fixes prediction order (registration
order), owns the label mapping between backend-native labels and schema
indices, and is the orchestrator's source of truth for model versions.
"""
from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import requests

from .core import LabelSchema, Prediction, RefineHparams, Sample
from .errors import (
    BackendUnavailable,
    DuplicateBackend,
    FanoutFailed,
    InvalidInput,
    LabelMapError,
    RefineFailed,
)

HEALTH_PATH = "/v1/health"
PREDICT_PATH = "/v1/predict"
REFINE_PATH = "/v1/refine"


@dataclass(frozen=True)
class HealthInfo:
    model_id: str
    model_version: int
    labels: tuple[str, ...]


@dataclass(frozen=True)
class WirePrediction:
    label: str
    confidence: float


@dataclass(frozen=True)
class WirePredictResponse:
    model_version: int
    predictions: tuple[WirePrediction, ...]


@dataclass(frozen=True)
class WireRefineResponse:
    model_version: int
    train_loss_before: float
    train_loss_after: float


class Backend(Protocol):
    """In-process view of the wire protocol."""

    def health(self) -> HealthInfo: ...

    def predict(self, texts: Sequence[str]) -> WirePredictResponse: ...

    def refine(self, samples: Sequence[dict], hparams: RefineHparams) -> WireRefineResponse: ...


class HttpBackend:
    """Wire-protocol client for a backend living behind a URL."""

    def __init__(self, base_url: str, timeout: float = 10.0, session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()

    def health(self) -> HealthInfo:
        data = self._get(HEALTH_PATH)
        if data.get("status") != "ok":
            raise BackendUnavailable(f"{self.base_url}: health status {data.get('status')!r}")
        return HealthInfo(
            model_id=data["model_id"],
            model_version=int(data["model_version"]),
            labels=tuple(data["labels"]),
        )

    def predict(self, texts: Sequence[str]) -> WirePredictResponse:
        data = self._post(PREDICT_PATH, {"texts": list(texts)})
        preds = tuple(WirePrediction(p["label"], float(p["confidence"])) for p in data["predictions"])
        if len(preds) != len(texts):
            raise BackendUnavailable(
                f"{self.base_url}: {len(preds)} predictions for {len(texts)} texts"
            )
        return WirePredictResponse(model_version=int(data["model_version"]), predictions=preds)

    def refine(self, samples: Sequence[dict], hparams: RefineHparams) -> WireRefineResponse:
        data = self._post(REFINE_PATH, {"samples": list(samples), "hyperparams": hparams.to_dict()})
        return WireRefineResponse(
            model_version=int(data["model_version"]),
            train_loss_before=float(data["train_loss_before"]),
            train_loss_after=float(data["train_loss_after"]),
        )

    def _get(self, path: str) -> dict:
        try:
            resp = self._session.get(self.base_url + path, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except (requests.RequestException, ValueError, KeyError) as exc:
            raise BackendUnavailable(f"GET {path} failed: {exc}") from exc

    def _post(self, path: str, body: dict) -> dict:
        try:
            resp = self._session.post(self.base_url + path, json=body, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except (requests.RequestException, ValueError, KeyError) as exc:
            raise BackendUnavailable(f"POST {path} failed: {exc}") from exc


@dataclass
class BackendDescriptor:
    backend_id: str
    handle: Backend
    declared_labels: tuple[str, ...]
    label_map: dict[str, int]
    model_version: int
    healthy: bool = True

    def schema_label_for(self, wire_label: str) -> Optional[int]:
        return self.label_map.get(wire_label)

    def wire_label_for(self, schema_index: int) -> Optional[str]:
        for wire, idx in self.label_map.items():
            if idx == schema_index:
                return wire
        return None


@dataclass(frozen=True)
class BackendFailure:
    """Marker emitted when a backend produced no usable prediction."""

    backend_id: str
    reason: str


@dataclass(frozen=True)
class FanoutResult:
    """Per-sample predictions (registry order) plus failure markers."""

    predictions: tuple[Prediction, ...]
    failures: tuple[BackendFailure, ...]


class BackendRegistry:
    """Ordered backend registry; concurrent reads, serialized writes."""

    def __init__(self, schema: LabelSchema):
        self.schema = schema
        self._lock = threading.Lock()
        self._backends: dict[str, BackendDescriptor] = {}

    def register(
        self,
        backend_id: str,
        handle: Backend,
        label_map: Optional[dict[str, str]] = None,
    ) -> BackendDescriptor:
        """Probe, map labels and add the backend at the end of the order.

        ``label_map`` maps backend-native label strings to schema label
        strings; labels that already canonicalize to a schema label map
        themselves. Every declared label must end up mapped.
        """
        with self._lock:
            if backend_id in self._backends:
                raise DuplicateBackend(f"backend id {backend_id!r} already registered")
        info = handle.health()

        resolved: dict[str, int] = {}
        unmappable: list[str] = []
        overrides = label_map or {}
        for declared in info.labels:
            target = overrides.get(declared, declared)
            idx = self.schema.index_of(target)
            if idx is None:
                unmappable.append(declared)
            else:
                resolved[declared] = idx
        if unmappable:
            raise LabelMapError(backend_id, unmappable)

        descriptor = BackendDescriptor(
            backend_id=backend_id,
            handle=handle,
            declared_labels=info.labels,
            label_map=resolved,
            model_version=info.model_version,
        )
        with self._lock:
            if backend_id in self._backends:
                raise DuplicateBackend(f"backend id {backend_id!r} already registered")
            self._backends[backend_id] = descriptor
        return descriptor

    def backends(self) -> list[BackendDescriptor]:
        with self._lock:
            return list(self._backends.values())

    def get(self, backend_id: str) -> BackendDescriptor:
        with self._lock:
            return self._backends[backend_id]

    def size(self) -> int:
        with self._lock:
            return len(self._backends)

    def versions(self) -> dict[str, int]:
        with self._lock:
            return {b.backend_id: b.model_version for b in self._backends.values()}

    def restore_versions(self, versions: dict[str, int]) -> None:
        """Adopt checkpointed versions after re-registering backends on resume.

        In-process stub handles keep their version as plain state, so it is
        pushed into them too; remote backends persist their own version and
        ignore this path.
        """
        with self._lock:
            for backend_id, version in versions.items():
                desc = self._backends.get(backend_id)
                if desc is None:
                    continue
                desc.model_version = version
                if hasattr(desc.handle, "model_version"):
                    desc.handle.model_version = version


def predict_fanout(
    batch: Sequence[Sample],
    registry: BackendRegistry,
    retries: int = 2,
    parallelism: int = 8,
) -> list[FanoutResult]:
    """Send one batched predict to every backend and merge per sample.

    Backends are queried concurrently; results are merged in registry order so
    reruns are reproducible. A backend that fails all its retries contributes a
    failure marker for every sample of the batch. If every backend fails, the
    batch is unusable and the run must pause.
    """
    backends = registry.backends()
    if not backends:
        raise FanoutFailed("no backends registered")
    if not batch:
        return []
    texts = [s.text for s in batch]

    def call(desc: BackendDescriptor):
        last: Optional[Exception] = None
        for _ in range(retries + 1):
            try:
                return desc.handle.predict(texts)
            except BackendUnavailable as exc:
                last = exc
        return BackendFailure(desc.backend_id, str(last))

    with ThreadPoolExecutor(max_workers=max(1, min(parallelism, len(backends)))) as pool:
        raw = list(pool.map(call, backends))

    results = []
    for i, sample in enumerate(batch):
        preds: list[Prediction] = []
        fails: list[BackendFailure] = []
        for desc, resp in zip(backends, raw):
            if isinstance(resp, BackendFailure):
                fails.append(resp)
                continue
            wire = resp.predictions[i]
            idx = desc.schema_label_for(wire.label)
            if idx is None:
                fails.append(BackendFailure(desc.backend_id, f"undeclared label {wire.label!r}"))
                continue
            preds.append(
                Prediction(
                    backend_id=desc.backend_id,
                    label=idx,
                    confidence=wire.confidence,
                    model_version=resp.model_version,
                )
            )
        if not preds:
            raise FanoutFailed(f"all backends failed for sample {sample.id!r}")
        results.append(FanoutResult(predictions=tuple(preds), failures=tuple(fails)))
    return results


def refine_all(
    pool_snapshot: Sequence[dict],
    hparams: RefineHparams,
    registry: BackendRegistry,
) -> list[WireRefineResponse]:
    """Fine-tune every backend on the identical snapshot, all-or-nothing.

    The snapshot carries schema label strings; each backend receives it
    translated into its own label vocabulary. Registry versions advance only
    after every backend succeeded; a midway failure leaves registry state
    untouched and the cycle retriable. (A worker that finished an aborted
    attempt keeps its internal bump; the monotone version check below absorbs
    that on the retry.)
    """
    if not pool_snapshot:
        raise InvalidInput("refine snapshot must be non-empty")
    backends = registry.backends()
    if not backends:
        raise RefineFailed("no backends registered")

    responses: list[WireRefineResponse] = []
    for desc in backends:
        payload = []
        for item in pool_snapshot:
            idx = registry.schema.index_of(item["label"])
            if idx is None:
                raise InvalidInput(f"snapshot label {item['label']!r} not in schema")
            wire = desc.wire_label_for(idx)
            if wire is None:
                raise RefineFailed(
                    f"backend {desc.backend_id!r} has no label for {item['label']!r}"
                )
            payload.append({"text": item["text"], "label": wire})
        try:
            resp = desc.handle.refine(payload, hparams)
        except BackendUnavailable as exc:
            raise RefineFailed(f"backend {desc.backend_id!r}: {exc}") from exc
        if resp.model_version <= desc.model_version:
            raise RefineFailed(
                f"backend {desc.backend_id!r} returned non-increasing version "
                f"{resp.model_version} (had {desc.model_version})"
            )
        responses.append(resp)

    for desc, resp in zip(backends, responses):
        desc.model_version = resp.model_version
    return responses
