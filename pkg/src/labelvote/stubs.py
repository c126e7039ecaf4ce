"""Deterministic in-process backends for tests, sweeps and demos.

Both stubs key their behaviour on the sample text alone (the wire protocol
carries nothing else), so results are independent of batch boundaries and
ordering. NoisyBackend derives a fresh RNG per text from a string seed, which
keeps a rerun with different batch sizes byte-identical.
"""
from __future__ import annotations

import random
from typing import Optional, Sequence

from .core import RefineHparams
from .errors import BackendUnavailable
from .gateway import HealthInfo, WirePrediction, WirePredictResponse, WireRefineResponse


class ScriptedBackend:
    """Backend answering from an explicit text -> label table.

    ``fail_predicts`` / ``fail_refines`` are countdown counters: while
    positive, the corresponding call raises BackendUnavailable and the counter
    drops by one. Failures are injected before any state changes, so a failed
    refine never bumps the version.
    """

    def __init__(
        self,
        backend_id: str,
        labels: Sequence[str],
        script: Optional[dict[str, str]] = None,
        default_label: Optional[str] = None,
        confidence: float = 0.9,
        model_version: int = 0,
        fail_predicts: int = 0,
        fail_refines: int = 0,
    ):
        self.backend_id = backend_id
        self.labels = tuple(labels)
        self.script = dict(script or {})
        self.default_label = default_label if default_label is not None else self.labels[0]
        self.confidence = confidence
        self.model_version = model_version
        self.fail_predicts = fail_predicts
        self.fail_refines = fail_refines
        self.refine_calls: list[list[dict]] = []

    def health(self) -> HealthInfo:
        return HealthInfo(
            model_id=f"scripted/{self.backend_id}",
            model_version=self.model_version,
            labels=self.labels,
        )

    def predict(self, texts: Sequence[str]) -> WirePredictResponse:
        if self.fail_predicts > 0:
            self.fail_predicts -= 1
            raise BackendUnavailable(f"{self.backend_id}: scripted predict failure")
        preds = tuple(
            WirePrediction(self.script.get(t, self.default_label), self.confidence)
            for t in texts
        )
        return WirePredictResponse(model_version=self.model_version, predictions=preds)

    def refine(self, samples: Sequence[dict], hparams: RefineHparams) -> WireRefineResponse:
        if self.fail_refines > 0:
            self.fail_refines -= 1
            raise BackendUnavailable(f"{self.backend_id}: scripted refine failure")
        self.refine_calls.append(list(samples))
        # Fabricated but deterministic losses; shrink with every cycle.
        before = 1.0 / (1 + self.model_version)
        self.model_version += 1
        after = 1.0 / (1 + self.model_version)
        return WireRefineResponse(
            model_version=self.model_version,
            train_loss_before=before,
            train_loss_after=after,
        )


class NoisyBackend:
    """Backend that answers the gold label with probability ``accuracy``.

    Wrong answers pick uniformly among the remaining labels. The coin for a
    text never depends on when the text is seen: each prediction draws from
    ``random.Random(f"{seed}:{backend_id}:{text}")``.
    """

    def __init__(
        self,
        backend_id: str,
        labels: Sequence[str],
        gold: dict[str, str],
        accuracy: float = 0.9,
        seed: int = 0,
        default_label: Optional[str] = None,
        model_version: int = 0,
    ):
        if not 0.0 <= accuracy <= 1.0:
            raise ValueError("accuracy must be within [0, 1]")
        self.backend_id = backend_id
        self.labels = tuple(labels)
        self.gold = dict(gold)
        self.accuracy = accuracy
        self.seed = seed
        self.default_label = default_label if default_label is not None else self.labels[0]
        self.model_version = model_version
        self.refine_calls: list[list[dict]] = []

    def _draw(self, text: str) -> WirePrediction:
        rng = random.Random(f"{self.seed}:{self.backend_id}:{text}")
        gold = self.gold.get(text, self.default_label)
        if rng.random() < self.accuracy:
            label = gold
            confidence = 0.6 + 0.4 * rng.random()
        else:
            others = [l for l in self.labels if l != gold] or [gold]
            label = others[rng.randrange(len(others))]
            confidence = 0.3 + 0.4 * rng.random()
        return WirePrediction(label, round(confidence, 6))

    def health(self) -> HealthInfo:
        return HealthInfo(
            model_id=f"noisy/{self.backend_id}",
            model_version=self.model_version,
            labels=self.labels,
        )

    def predict(self, texts: Sequence[str]) -> WirePredictResponse:
        preds = tuple(self._draw(t) for t in texts)
        return WirePredictResponse(model_version=self.model_version, predictions=preds)

    def refine(self, samples: Sequence[dict], hparams: RefineHparams) -> WireRefineResponse:
        self.refine_calls.append(list(samples))
        before = 1.0 / (1 + self.model_version)
        self.model_version += 1
        after = 1.0 / (1 + self.model_version)
        return WireRefineResponse(
            model_version=self.model_version,
            train_loss_before=before,
            train_loss_after=after,
        )
