"""Crash-safe run checkpoints.

A checkpoint is a single JSON document: a format version, the state payload,
and a sha256 over the canonical payload encoding. Writes go through a
temporary file and os.replace, so a reader never observes a half-written
checkpoint. Loading recomputes the checksum and refuses corrupted files.
"""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Union

from .errors import ChecksumError, InvalidInput

FORMAT_VERSION = 1


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def payload_checksum(payload: dict) -> str:
    return hashlib.sha256(_canonical(payload)).hexdigest()


def write_checkpoint(path: Union[str, Path], payload: dict) -> None:
    path = Path(path)
    doc = {
        "format_version": FORMAT_VERSION,
        "payload": payload,
        "checksum": payload_checksum(payload),
    }
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def read_checkpoint(path: Union[str, Path]) -> dict:
    """Return the verified payload; raise ChecksumError on any corruption."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ChecksumError(f"checkpoint {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "payload" not in doc or "checksum" not in doc:
        raise ChecksumError(f"checkpoint {path} is missing required fields")
    if doc.get("format_version") != FORMAT_VERSION:
        raise InvalidInput(
            f"checkpoint format {doc.get('format_version')!r} is not supported"
        )
    expected = payload_checksum(doc["payload"])
    if doc["checksum"] != expected:
        raise ChecksumError(
            f"checkpoint {path} checksum mismatch: stored {doc['checksum'][:12]}..., "
            f"computed {expected[:12]}..."
        )
    return doc["payload"]
