"""Append-only audit trail and the category-level authorization gate."""

from __future__ import annotations

import hashlib
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .cluster.model import VerbCategory
from .recordlog import RecordLog, canonical_json
from .roles import UserRole

AUDIT_ACTIONS = (
    "query_received",
    "query_rejected",
    "routing_decision",
    "tool_dispatched",
    "tool_result",
    "llm_call",
    "codegen_stage",
    "tool_registered",
    "interrupt_raised",
    "interrupt_resolved",
)


@dataclass(frozen=True)
class AuditRecord:
    record_id: str
    timestamp: float
    session_id: str
    actor: str
    action: str
    target: str
    payload_digest: str
    outcome: str
    payload: dict[str, Any] | None = None

    def to_payload(self) -> dict[str, Any]:
        record = {
            "record_id": self.record_id,
            "timestamp": self.timestamp,
            "session_id": self.session_id,
            "actor": self.actor,
            "action": self.action,
            "target": self.target,
            "payload_digest": self.payload_digest,
            "outcome": self.outcome,
        }
        if self.payload is not None:
            record["payload"] = self.payload
        return record

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "AuditRecord":
        return cls(
            record_id=payload["record_id"],
            timestamp=payload["timestamp"],
            session_id=payload.get("session_id", ""),
            actor=payload["actor"],
            action=payload["action"],
            target=payload.get("target", ""),
            payload_digest=payload.get("payload_digest", ""),
            outcome=payload.get("outcome", ""),
            payload=payload.get("payload"),
        )


def digest_payload(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


class AuditLog:
    """Ordered, immutable audit records; optionally file-backed.

    Payloads are stored as digests by default (full bodies live in per-run
    artifact directories); inline_payloads=True keeps the body in the record.
    """

    def __init__(self, path: str | Path | None = None, inline_payloads: bool = False):
        self._records: list[AuditRecord] = []
        self._lock = threading.Lock()
        self._last_ts_per_session: dict[str, float] = {}
        self.inline_payloads = inline_payloads
        self._file = RecordLog(path) if path is not None else None
        if self._file is not None:
            for payload in self._file.records():
                self._records.append(AuditRecord.from_payload(payload))
            for record in self._records:
                self._last_ts_per_session[record.session_id] = record.timestamp

    def append(
        self,
        *,
        session_id: str,
        actor: str,
        action: str,
        target: str = "",
        payload: Any = None,
        outcome: str = "",
    ) -> str:
        if action not in AUDIT_ACTIONS:
            raise ValueError(f"unknown audit action {action!r}")
        with self._lock:
            now = time.time()
            # timestamps non-decreasing per session even under clock skew
            floor = self._last_ts_per_session.get(session_id, 0.0)
            timestamp = max(now, floor)
            self._last_ts_per_session[session_id] = timestamp
            record = AuditRecord(
                record_id=uuid.uuid4().hex,
                timestamp=timestamp,
                session_id=session_id,
                actor=actor,
                action=action,
                target=target,
                payload_digest=digest_payload(payload) if payload is not None else "",
                outcome=outcome,
                payload=payload if (self.inline_payloads and payload is not None) else None,
            )
            self._records.append(record)
            if self._file is not None:
                self._file.append(record.to_payload())
            return record.record_id

    def query(
        self,
        *,
        session_id: str | None = None,
        action: str | None = None,
        since: float | None = None,
        until: float | None = None,
    ) -> list[AuditRecord]:
        with self._lock:
            selected = [
                r
                for r in self._records
                if (session_id is None or r.session_id == session_id)
                and (action is None or r.action == action)
                and (since is None or r.timestamp >= since)
                and (until is None or r.timestamp <= until)
            ]
        return sorted(selected, key=lambda r: (r.timestamp, r.record_id))

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


def authorize(role: UserRole, category: VerbCategory) -> bool:
    """Pure category gate shared by the query gateway and dispatch."""
    return role.allows(category)
