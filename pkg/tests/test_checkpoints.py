"""Checkpoint store contract: ordering, roundtrip identity, crash safety."""

from __future__ import annotations

import json
import random

import pytest

from kubepilot.checkpoints import (
    FileCheckpointStore,
    InMemoryCheckpointStore,
    restore_state,
    serialize_state,
)
from kubepilot.cluster.model import VerbCategory
from kubepilot.errors import CorruptBlob, NotFound, SequenceConflict
from kubepilot.querygate import QueryScope, StructuredQuery
from kubepilot.state import InterruptRequest, WorkflowState
from kubepilot.tooling import ToolResult


def sample_state(status: str = "running", interrupt_kind: str | None = None) -> WorkflowState:
    state = WorkflowState(session_id="s1", turn_index=1, step_counter=4)
    state.query = StructuredQuery(
        raw_text="list pods",
        role_name="admin",
        status="accepted",
        intent_category=VerbCategory.READ,
        scope=QueryScope(namespaces=["demo"], resource_kinds=["pod"]),
        hints={"k": "v"},
    )
    state.transcript = [("user", "list pods"), ("supervisor", "routing")]
    state.agent_outputs = {
        "Configs": [ToolResult(status="success", data={"pods": ["a"]}, produced_at_step=2)],
        "Logs": [ToolResult(status="error", error_message="boom", produced_at_step=3)],
    }
    state.per_task_retries = {"Logs:fetch": 1}
    state.status = status
    if status == "awaiting_human":
        kind = interrupt_kind or "clarification"
        state.pending_interrupt = InterruptRequest(kind=kind, prompt="Which ns?", originating_step=4)
        state.pending_resume = {"kind": "supervisor_clarify"}
    return state


@pytest.fixture(params=["memory", "file"])
def store(request, tmp_path):
    if request.param == "memory":
        return InMemoryCheckpointStore()
    return FileCheckpointStore(tmp_path / "checkpoints.log")


class TestSaveLoadList:
    def test_first_save_seq_zero(self, store):
        store.save_checkpoint("s1", 0, "validate", "node_boundary", sample_state())
        assert store.load_latest("s1").seq == 0

    def test_sequence_conflict(self, store):
        store.save_checkpoint("s1", 7, "a", "node_boundary", sample_state())
        with pytest.raises(SequenceConflict):
            store.save_checkpoint("s1", 5, "b", "node_boundary", sample_state())
        with pytest.raises(SequenceConflict):
            store.save_checkpoint("s1", 7, "b", "node_boundary", sample_state())

    def test_ten_sequential_saves_in_order(self, store):
        reference = []  # in-memory reference log
        for seq in range(10):
            store.save_checkpoint("s1", seq, f"node-{seq}", "node_boundary", sample_state())
            reference.append(seq)
        listed = store.list_checkpoints("s1")
        assert [c.seq for c in listed] == reference

    def test_load_latest_returns_max_seq(self, store):
        for seq in (0, 1, 2):
            store.save_checkpoint("s1", seq, "n", "node_boundary", sample_state())
        assert store.load_latest("s1").seq == 2

    def test_unknown_session(self, store):
        with pytest.raises(NotFound):
            store.load_latest("ghost")
        assert store.list_checkpoints("ghost") == []

    def test_sessions_are_partitioned(self, store):
        store.save_checkpoint("a", 0, "n", "node_boundary", sample_state())
        store.save_checkpoint("b", 0, "n", "node_boundary", sample_state())
        store.save_checkpoint("a", 1, "n", "node_boundary", sample_state())
        assert [c.session_id for c in store.list_checkpoints("a")] == ["a", "a"]
        assert [c.session_id for c in store.list_checkpoints("b")] == ["b"]

    def test_roundtrip_after_save(self, store):
        state = sample_state()
        store.save_checkpoint("s1", 3, "n", "node_boundary", state)
        restored = restore_state(store.load_latest("s1"))
        assert serialize_state(restored) == serialize_state(state)


class TestRoundtrip:
    @pytest.mark.parametrize(
        "status,interrupt_kind",
        [
            ("running", None),
            ("completed", None),
            ("failed", None),
            ("awaiting_human", "clarification"),
            ("awaiting_human", "approval"),
        ],
    )
    def test_identity_across_statuses_and_interrupt_kinds(self, status, interrupt_kind):
        state = sample_state(status, interrupt_kind)
        blob = serialize_state(state)
        restored = WorkflowState.from_payload(json.loads(blob))
        assert serialize_state(restored) == blob
        restored.check_invariants()

    def test_pending_interrupt_restored_field_by_field(self, store):
        state = sample_state("awaiting_human", "approval")
        store.save_checkpoint("s1", 9, "n", "interrupt", state)
        restored = restore_state(store.load_latest("s1"))
        # structural diff oracle: payload dictionaries must match exactly
        assert restored.pending_interrupt is not None
        assert restored.pending_interrupt.to_payload() == state.pending_interrupt.to_payload()

    def test_truncated_blob_is_corrupt(self):
        state = sample_state()
        checkpoint = InMemoryCheckpointStore()._build("s1", 0, "n", "node_boundary", state)
        truncated = checkpoint.__class__(**{**checkpoint.to_payload(), "state_blob": checkpoint.state_blob[:25]})
        with pytest.raises(CorruptBlob):
            restore_state(truncated)


class TestFileDurability:
    def test_reopen_preserves_records(self, tmp_path):
        path = tmp_path / "cp.log"
        store = FileCheckpointStore(path)
        for seq in range(5):
            store.save_checkpoint("s1", seq, "n", "node_boundary", sample_state())
        reopened = FileCheckpointStore(path)
        assert [c.seq for c in reopened.list_checkpoints("s1")] == list(range(5))
        restored = restore_state(reopened.load_latest("s1"))
        restored.check_invariants()

    def test_partial_trailing_write_ignored(self, tmp_path):
        path = tmp_path / "cp.log"
        store = FileCheckpointStore(path)
        store.save_checkpoint("s1", 0, "n", "node_boundary", sample_state())
        store.save_checkpoint("s1", 1, "n", "node_boundary", sample_state())
        # simulate a process kill mid-append: torn record at the tail
        with open(path, "a") as handle:
            handle.write('999 deadbeef {"chopped": ')
        reopened = FileCheckpointStore(path)
        assert reopened.load_latest("s1").seq == 1

    def test_append_only_bytes_are_stable(self, tmp_path):
        path = tmp_path / "cp.log"
        store = FileCheckpointStore(path)
        store.save_checkpoint("s1", 0, "n", "node_boundary", sample_state())
        first_bytes = path.read_bytes()
        store.save_checkpoint("s1", 1, "n", "node_boundary", sample_state())
        assert path.read_bytes()[: len(first_bytes)] == first_bytes

    def test_seq_conflict_survives_reopen(self, tmp_path):
        path = tmp_path / "cp.log"
        FileCheckpointStore(path).save_checkpoint("s1", 4, "n", "node_boundary", sample_state())
        reopened = FileCheckpointStore(path)
        with pytest.raises(SequenceConflict):
            reopened.save_checkpoint("s1", 4, "n", "node_boundary", sample_state())


def test_randomized_operations_match_reference_log(tmp_path):
    """Smaller sibling of the acceptance criterion: random save/load/list."""
    rng = random.Random(7)
    store = FileCheckpointStore(tmp_path / "cp.log")
    reference: dict[str, list[int]] = {}
    sessions = [f"s{i}" for i in range(4)]
    for _ in range(200):
        session = rng.choice(sessions)
        op = rng.choice(["save", "load", "list"])
        if op == "save":
            next_seq = (reference.get(session) or [-1])[-1] + 1
            store.save_checkpoint(session, next_seq, "n", "node_boundary", sample_state())
            reference.setdefault(session, []).append(next_seq)
        elif op == "load":
            if reference.get(session):
                assert store.load_latest(session).seq == reference[session][-1]
            else:
                with pytest.raises(NotFound):
                    store.load_latest(session)
        else:
            assert [c.seq for c in store.list_checkpoints(session)] == reference.get(session, [])
