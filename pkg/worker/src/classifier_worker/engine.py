"""The deterministic toy classifier engine.

Hashed bag-of-words features (2^16 buckets via crc32) into a multinomial
logistic regression, trained by full-batch gradient descent with L2 weight
decay. Small enough to verify the whole refine contract on a laptop, yet a
real model: cross-entropy on a separable pool genuinely goes down.

Determinism: weights start from a generator seeded with ``seed``, token
hashing is crc32 (no process salt), and training order is the pool order, so
the same seed, pool and hyperparameters always give identical weights and
losses.
"""
from __future__ import annotations

import json
import os
import threading
import zlib
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

BUCKETS = 1 << 16


class WorkerError(Exception):
    """Engine-level failure with a message fit for a wire response."""


def tokenize(text: str) -> list[str]:
    return text.lower().split()


def bucket_of(token: str) -> int:
    return zlib.crc32(token.encode("utf-8")) % BUCKETS


def featurize(text: str) -> dict[int, float]:
    """Sparse normalized token counts; empty text maps to no features."""
    tokens = tokenize(text)
    if not tokens:
        return {}
    weight = 1.0 / len(tokens)
    feats: dict[int, float] = {}
    for tok in tokens:
        b = bucket_of(tok)
        feats[b] = feats.get(b, 0.0) + weight
    return feats


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


class ToyEngine:
    """Multinomial logistic regression over hashed bag-of-words features.

    Predictions are pure with respect to the model version: weights only
    change inside ``refine``, which swaps in a freshly trained copy at the
    end, so concurrent predicts always see a consistent snapshot.
    """

    name = "toy"

    def __init__(
        self,
        labels: Sequence[str],
        seed: int = 0,
        checkpoint_dir: Optional[str] = None,
        reset_each_refine: bool = False,
    ):
        if len(labels) < 2:
            raise WorkerError("need at least two labels")
        if len(set(labels)) != len(labels):
            raise WorkerError("labels must be unique")
        self.labels = tuple(labels)
        self.seed = seed
        self.reset_each_refine = reset_each_refine
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir else None
        self.model_version = 0
        self._weights = self._initial_weights()
        self._swap_lock = threading.Lock()
        if self.checkpoint_dir is not None:
            self._load_checkpoint()

    @property
    def model_id(self) -> str:
        return f"toy-hashed-linear-seed{self.seed}"

    def _initial_weights(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.normal(0.0, 0.01, size=(BUCKETS, len(self.labels)))

    # -- inference -----------------------------------------------------------

    def _proba(self, weights: np.ndarray, text: str) -> np.ndarray:
        z = np.zeros(len(self.labels))
        for b, x in featurize(text).items():
            z += x * weights[b]
        return _softmax(z)

    def predict(self, texts: Sequence[str]) -> list[tuple[str, float]]:
        weights = self._weights  # one snapshot for the whole batch
        out = []
        for text in texts:
            p = self._proba(weights, text)
            idx = int(np.argmax(p))
            out.append((self.labels[idx], float(p[idx])))
        return out

    # -- training ------------------------------------------------------------

    def _pool_loss(self, weights: np.ndarray, feats, targets) -> float:
        total = 0.0
        for f, y in zip(feats, targets):
            z = np.zeros(len(self.labels))
            for b, x in f.items():
                z += x * weights[b]
            p = _softmax(z)
            total -= float(np.log(max(p[y], 1e-300)))
        return total / len(targets)

    def refine(
        self,
        samples: Sequence[dict],
        learning_rate: float = 2e-5,
        weight_decay: float = 0.01,
        epochs: int = 3,
    ) -> dict:
        """Full-batch gradient descent on the pool; returns the wire payload.

        The version bumps even for zero epochs: the caller asked for a new
        model generation and bookkeeping must move with it.
        """
        if not samples:
            raise WorkerError("refine needs a non-empty sample list")
        if learning_rate <= 0 or weight_decay < 0 or epochs < 0:
            raise WorkerError("bad hyperparameters")
        targets = []
        for s in samples:
            try:
                targets.append(self.labels.index(s["label"]))
            except (ValueError, KeyError, TypeError):
                raise WorkerError(f"label {s.get('label')!r} not in {list(self.labels)}") from None
        feats = [featurize(s["text"]) for s in samples]

        base = self._initial_weights() if self.reset_each_refine else self._weights
        weights = base.copy()
        n = len(samples)
        loss_before = self._pool_loss(weights, feats, targets)
        for _ in range(epochs):
            grad = weight_decay * weights
            for f, y in zip(feats, targets):
                z = np.zeros(len(self.labels))
                for b, x in f.items():
                    z += x * weights[b]
                err = _softmax(z)
                err[y] -= 1.0
                for b, x in f.items():
                    grad[b] += (x / n) * err
            weights -= learning_rate * grad
        loss_after = self._pool_loss(weights, feats, targets)

        with self._swap_lock:
            self._weights = weights
            self.model_version += 1
            version = self.model_version
        self._save_checkpoint()
        return {
            "model_version": version,
            "train_loss_before": loss_before,
            "train_loss_after": loss_after,
        }

    # -- persistence ---------------------------------------------------------

    def _state_path(self) -> Path:
        return self.checkpoint_dir / "state.json"

    def _weights_path(self) -> Path:
        return self.checkpoint_dir / "weights.npy"

    def _save_checkpoint(self) -> None:
        if self.checkpoint_dir is None:
            return
        self.checkpoint_dir.mkdir(parents=True, exist_ok=True)
        tmp_w = self._weights_path().with_suffix(".npy.tmp")
        with open(tmp_w, "wb") as fh:
            np.save(fh, self._weights)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_w, self._weights_path())
        state = {
            "engine": self.name,
            "labels": list(self.labels),
            "seed": self.seed,
            "model_version": self.model_version,
        }
        tmp_s = self._state_path().with_suffix(".json.tmp")
        tmp_s.write_text(json.dumps(state, indent=2))
        os.replace(tmp_s, self._state_path())

    def _load_checkpoint(self) -> None:
        if not self._state_path().exists():
            return
        state = json.loads(self._state_path().read_text())
        if state.get("labels") != list(self.labels) or state.get("seed") != self.seed:
            raise WorkerError(
                f"checkpoint in {self.checkpoint_dir} was written for labels="
                f"{state.get('labels')} seed={state.get('seed')}"
            )
        self._weights = np.load(self._weights_path())
        self.model_version = int(state["model_version"])
