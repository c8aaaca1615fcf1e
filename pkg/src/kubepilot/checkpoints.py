"""Durable, ordered checkpoint log per session.

Two backends behind one contract: in-memory (tests, ephemeral runs) and an
append-only file log using the shared length+digest line envelope, so a
torn write is detected and ignored rather than surfaced as a bad record.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from .errors import CorruptBlob, NotFound, SequenceConflict
from .recordlog import RecordLog, canonical_json, decode_record, encode_record
from .state import WorkflowState

CAUSES = ("node_boundary", "interrupt", "completion", "failure")


@dataclass(frozen=True)
class Checkpoint:
    checkpoint_id: str
    session_id: str
    seq: int
    node_name: str
    cause: str
    state_blob: str
    created_at: float

    def to_payload(self) -> dict:
        return {
            "checkpoint_id": self.checkpoint_id,
            "session_id": self.session_id,
            "seq": self.seq,
            "node_name": self.node_name,
            "cause": self.cause,
            "state_blob": self.state_blob,
            "created_at": self.created_at,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Checkpoint":
        return cls(
            checkpoint_id=payload["checkpoint_id"],
            session_id=payload["session_id"],
            seq=int(payload["seq"]),
            node_name=payload["node_name"],
            cause=payload["cause"],
            state_blob=payload["state_blob"],
            created_at=float(payload["created_at"]),
        )


def serialize_state(state: WorkflowState) -> str:
    """Canonical field-ordered JSON; structural equality == string equality."""
    return canonical_json(state.to_payload())


def restore_state(checkpoint: Checkpoint) -> WorkflowState:
    try:
        payload = json.loads(checkpoint.state_blob)
    except json.JSONDecodeError as exc:
        raise CorruptBlob(f"state blob is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise CorruptBlob("state blob must decode to an object")
    return WorkflowState.from_payload(payload)


class CheckpointStore:
    """Contract shared by every backend."""

    def save_checkpoint(
        self, session_id: str, seq: int, node_name: str, cause: str, state: WorkflowState
    ) -> str:
        raise NotImplementedError

    def load_latest(self, session_id: str) -> Checkpoint:
        raise NotImplementedError

    def list_checkpoints(self, session_id: str) -> list[Checkpoint]:
        raise NotImplementedError

    def sessions(self) -> list[str]:
        raise NotImplementedError

    def _build(
        self, session_id: str, seq: int, node_name: str, cause: str, state: WorkflowState
    ) -> Checkpoint:
        if cause not in CAUSES:
            raise ValueError(f"unknown checkpoint cause {cause!r}")
        return Checkpoint(
            checkpoint_id=uuid.uuid4().hex,
            session_id=session_id,
            seq=seq,
            node_name=node_name,
            cause=cause,
            state_blob=serialize_state(state),
            created_at=time.time(),
        )


class InMemoryCheckpointStore(CheckpointStore):
    def __init__(self):
        self._by_session: dict[str, list[Checkpoint]] = {}
        self._lock = threading.Lock()

    def save_checkpoint(
        self, session_id: str, seq: int, node_name: str, cause: str, state: WorkflowState
    ) -> str:
        with self._lock:
            existing = self._by_session.setdefault(session_id, [])
            latest = existing[-1].seq if existing else -1
            if seq <= latest:
                raise SequenceConflict(
                    f"seq {seq} is not greater than latest {latest} for session {session_id}"
                )
            checkpoint = self._build(session_id, seq, node_name, cause, state)
            existing.append(checkpoint)
            return checkpoint.checkpoint_id

    def load_latest(self, session_id: str) -> Checkpoint:
        with self._lock:
            existing = self._by_session.get(session_id)
            if not existing:
                raise NotFound(f"no checkpoints for session {session_id!r}")
            return existing[-1]

    def list_checkpoints(self, session_id: str) -> list[Checkpoint]:
        with self._lock:
            return list(self._by_session.get(session_id, []))

    def sessions(self) -> list[str]:
        with self._lock:
            return sorted(self._by_session)


class FileCheckpointStore(CheckpointStore):
    """Append-only file log; safe to reopen after a crash."""

    def __init__(self, path: str | Path):
        self._log = RecordLog(path)
        self._lock = threading.Lock()
        self._by_session: dict[str, list[Checkpoint]] = {}
        for payload in self._log.records():
            checkpoint = Checkpoint.from_payload(payload)
            self._by_session.setdefault(checkpoint.session_id, []).append(checkpoint)
        for session_checkpoints in self._by_session.values():
            session_checkpoints.sort(key=lambda c: c.seq)

    @property
    def path(self) -> Path:
        return self._log.path

    def save_checkpoint(
        self, session_id: str, seq: int, node_name: str, cause: str, state: WorkflowState
    ) -> str:
        with self._lock:
            existing = self._by_session.setdefault(session_id, [])
            latest = existing[-1].seq if existing else -1
            if seq <= latest:
                raise SequenceConflict(
                    f"seq {seq} is not greater than latest {latest} for session {session_id}"
                )
            checkpoint = self._build(session_id, seq, node_name, cause, state)
            self._log.append(checkpoint.to_payload())
            existing.append(checkpoint)
            return checkpoint.checkpoint_id

    def load_latest(self, session_id: str) -> Checkpoint:
        with self._lock:
            existing = self._by_session.get(session_id)
            if not existing:
                raise NotFound(f"no checkpoints for session {session_id!r}")
            return existing[-1]

    def list_checkpoints(self, session_id: str) -> list[Checkpoint]:
        with self._lock:
            return list(self._by_session.get(session_id, []))

    def sessions(self) -> list[str]:
        with self._lock:
            return sorted(self._by_session)


__all__ = [
    "Checkpoint",
    "CheckpointStore",
    "InMemoryCheckpointStore",
    "FileCheckpointStore",
    "serialize_state",
    "restore_state",
    "encode_record",
    "decode_record",
]
