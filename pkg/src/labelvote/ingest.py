"""Dataset loading: JSONL and CSV rows into Sample objects.

Rows need a non-empty ``text``. ``id`` is optional (the zero-based row index
becomes the id), ``gold_label`` is optional and accepts either a schema label
string or an integer index. Errors carry the offending row number.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Optional, Union

from .core import LabelSchema, Sample, canonical_label
from .errors import IngestError


def _parse_gold(value, schema: Optional[LabelSchema], row: int) -> Optional[int]:
    if value is None or value == "":
        return None
    if isinstance(value, bool):
        raise IngestError(row, f"gold_label {value!r} is not a label")
    if isinstance(value, int):
        if schema is not None and not 0 <= value < len(schema):
            raise IngestError(row, f"gold_label index {value} out of range")
        return value
    if isinstance(value, str):
        text = value.strip()
        if text.isdigit() and schema is not None and schema.index_of(canonical_label(text)) is None:
            return _parse_gold(int(text), schema, row)
        if schema is None:
            raise IngestError(row, "gold_label strings need a label schema")
        idx = schema.index_of(canonical_label(text))
        if idx is None:
            raise IngestError(row, f"gold_label {value!r} not in schema")
        return idx
    raise IngestError(row, f"gold_label {value!r} is not a label")


def _build_samples(rows: Iterable[dict], schema: Optional[LabelSchema]) -> list[Sample]:
    samples: list[Sample] = []
    seen: set[str] = set()
    for row_index, row in enumerate(rows):
        text = row.get("text")
        if not isinstance(text, str) or not text.strip():
            raise IngestError(row_index, "missing or empty text field")
        raw_id = row.get("id")
        if raw_id is None or raw_id == "":
            sample_id = str(row_index)
        else:
            sample_id = str(raw_id)
        if sample_id in seen:
            raise IngestError(row_index, f"duplicate sample id {sample_id!r}")
        seen.add(sample_id)
        gold = _parse_gold(row.get("gold_label"), schema, row_index)
        samples.append(Sample(id=sample_id, text=text, gold_label=gold))
    return samples


def load_jsonl(path: Union[str, Path], schema: Optional[LabelSchema] = None) -> list[Sample]:
    """Read one JSON object per line, preserving file order."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for row_index, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(row_index, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise IngestError(row_index, "row is not a JSON object")
            rows.append(obj)
    return _build_samples(rows, schema)


def load_csv(path: Union[str, Path], schema: Optional[LabelSchema] = None) -> list[Sample]:
    """Read a headered CSV; only id/text/gold_label columns are consulted."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "text" not in reader.fieldnames:
            raise IngestError(0, "CSV must have a header with a text column")
        rows = [dict(r) for r in reader]
    return _build_samples(rows, schema)


def load_samples(path: Union[str, Path], schema: Optional[LabelSchema] = None) -> list[Sample]:
    """Dispatch on file extension (.jsonl/.json -> JSONL, .csv -> CSV)."""
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".json"):
        return load_jsonl(path, schema)
    if suffix == ".csv":
        return load_csv(path, schema)
    raise IngestError(0, f"unsupported dataset format {suffix!r}")
