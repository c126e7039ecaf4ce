"""Transformer engine: serves a hub sequence-classification model.

Integration-mode only. Loading and fine-tuning need torch + transformers and
real hardware budgets, so nothing in the offline test suite touches this
module; the toy engine is the contract-verification path.
"""
from __future__ import annotations

import threading
from typing import Optional, Sequence

from .engine import WorkerError


class TransformerEngine:
    """Hub model behind the same interface the toy engine offers.

    ``labels`` must match the model's own output order; ``refine`` runs plain
    full-dataset gradient descent (no optimizer state) with the requested
    learning rate, weight decay and epochs, continuing from current weights.
    """

    name = "transformer"

    def __init__(
        self,
        labels: Sequence[str],
        model_id: str,
        seed: int = 0,
        checkpoint_dir: Optional[str] = None,
        device: str = "cpu",
        max_length: int = 256,
    ):
        try:
            import torch
            from transformers import AutoModelForSequenceClassification, AutoTokenizer
        except ImportError as exc:
            raise WorkerError(
                "transformer engine needs the 'transformer' extra installed"
            ) from exc
        self.labels = tuple(labels)
        self.seed = seed
        self.device = device
        self.max_length = max_length
        self._torch = torch
        torch.manual_seed(seed)
        self._tokenizer = AutoTokenizer.from_pretrained(model_id)
        self._model = AutoModelForSequenceClassification.from_pretrained(model_id).to(device)
        if self._model.config.num_labels != len(self.labels):
            raise WorkerError(
                f"model {model_id} has {self._model.config.num_labels} outputs, "
                f"config declares {len(self.labels)} labels"
            )
        self.model_id = model_id
        self.model_version = 0
        self._swap_lock = threading.Lock()

    def _batches(self, items, size=16):
        for i in range(0, len(items), size):
            yield items[i : i + size]

    def predict(self, texts: Sequence[str]) -> list[tuple[str, float]]:
        torch = self._torch
        out = []
        self._model.eval()
        with torch.no_grad():
            for chunk in self._batches(list(texts)):
                enc = self._tokenizer(
                    chunk,
                    truncation=True,
                    max_length=self.max_length,
                    padding=True,
                    return_tensors="pt",
                ).to(self.device)
                probs = torch.softmax(self._model(**enc).logits, dim=-1)
                for row in probs:
                    idx = int(row.argmax())
                    out.append((self.labels[idx], float(row[idx])))
        return out

    def _pool_loss(self, texts, targets) -> float:
        torch = self._torch
        total, seen = 0.0, 0
        self._model.eval()
        with torch.no_grad():
            for chunk, ys in zip(self._batches(texts), self._batches(targets)):
                enc = self._tokenizer(
                    chunk,
                    truncation=True,
                    max_length=self.max_length,
                    padding=True,
                    return_tensors="pt",
                ).to(self.device)
                labels = torch.tensor(ys, device=self.device)
                loss = self._model(**enc, labels=labels).loss
                total += float(loss) * len(chunk)
                seen += len(chunk)
        return total / seen

    def refine(
        self,
        samples: Sequence[dict],
        learning_rate: float = 2e-5,
        weight_decay: float = 0.01,
        epochs: int = 3,
    ) -> dict:
        if not samples:
            raise WorkerError("refine needs a non-empty sample list")
        torch = self._torch
        texts, targets = [], []
        for s in samples:
            try:
                targets.append(self.labels.index(s["label"]))
            except (ValueError, KeyError, TypeError):
                raise WorkerError(f"label {s.get('label')!r} not in {list(self.labels)}") from None
            texts.append(s["text"])

        loss_before = self._pool_loss(texts, targets)
        optimizer = torch.optim.SGD(
            self._model.parameters(), lr=learning_rate, weight_decay=weight_decay
        )
        self._model.train()
        for _ in range(epochs):
            for chunk, ys in zip(self._batches(texts), self._batches(targets)):
                enc = self._tokenizer(
                    chunk,
                    truncation=True,
                    max_length=self.max_length,
                    padding=True,
                    return_tensors="pt",
                ).to(self.device)
                labels = torch.tensor(ys, device=self.device)
                optimizer.zero_grad()
                loss = self._model(**enc, labels=labels).loss
                loss.backward()
                optimizer.step()
        loss_after = self._pool_loss(texts, targets)

        with self._swap_lock:
            self.model_version += 1
            version = self.model_version
        return {
            "model_version": version,
            "train_loss_before": loss_before,
            "train_loss_after": loss_after,
        }
