"""Append-only line log with partial-write detection.

One record per line: ``<byte-length> <sha256-digest> <canonical-json>``.
A record is only trusted when its measured length and digest match the
envelope, so a crash mid-append leaves at most one ignorable trailing line.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path
from typing import Any, Iterator

from .errors import StorageFault


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def encode_record(payload: dict[str, Any]) -> str:
    document = canonical_json(payload)
    raw = document.encode("utf-8")
    digest = hashlib.sha256(raw).hexdigest()
    return f"{len(raw)} {digest} {document}\n"


def decode_record(line: str) -> dict[str, Any] | None:
    """Parse one log line; None when the line is truncated or tampered."""
    parts = line.rstrip("\n").split(" ", 2)
    if len(parts) != 3:
        return None
    length_text, digest, document = parts
    raw = document.encode("utf-8")
    if not length_text.isdigit() or int(length_text) != len(raw):
        return None
    if hashlib.sha256(raw).hexdigest() != digest:
        return None
    try:
        payload = json.loads(document)
    except json.JSONDecodeError:
        return None
    return payload if isinstance(payload, dict) else None


class RecordLog:
    """Durable append-only store of JSON records."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch(exist_ok=True)
        except OSError as exc:
            raise StorageFault(f"cannot open record log {self.path}: {exc}") from exc

    def append(self, payload: dict[str, Any]) -> None:
        line = encode_record(payload)
        with self._lock:
            try:
                with open(self.path, "a", encoding="utf-8") as handle:
                    handle.write(line)
                    handle.flush()
                    os.fsync(handle.fileno())
            except OSError as exc:
                raise StorageFault(f"append to {self.path} failed: {exc}") from exc

    def records(self) -> Iterator[dict[str, Any]]:
        try:
            with open(self.path, encoding="utf-8", errors="replace") as handle:
                for line in handle:
                    payload = decode_record(line)
                    if payload is not None:
                        yield payload
        except OSError as exc:
            raise StorageFault(f"read of {self.path} failed: {exc}") from exc
