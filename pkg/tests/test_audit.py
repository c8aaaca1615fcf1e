"""Audit trail: append-only ordering, filters, immutability, authorize."""

from __future__ import annotations

import pytest

from kubepilot.audit import AuditLog, authorize
from kubepilot.cluster.model import VerbCategory
from kubepilot.errors import UnknownRole
from kubepilot.roles import RoleTable


def _append(log: AuditLog, n: int, session: str = "s1") -> None:
    for i in range(n):
        log.append(
            session_id=session,
            actor="supervisor",
            action="routing_decision",
            target=f"t{i}",
            payload={"i": i},
            outcome="ok",
        )


class TestAppend:
    def test_first_append(self):
        log = AuditLog()
        log.append(session_id="s1", actor="user", action="query_received")
        assert len(log) == 1

    def test_hundred_appends_in_order(self):
        log = AuditLog()
        _append(log, 100)
        records = log.query(session_id="s1")
        assert len(records) == 100  # reference-counter oracle
        assert [r.target for r in records] == [f"t{i}" for i in range(100)]
        timestamps = [r.timestamp for r in records]
        assert timestamps == sorted(timestamps)

    def test_append_after_reopen_keeps_prior_records(self, tmp_path):
        path = tmp_path / "audit.log"
        log = AuditLog(path)
        _append(log, 3)
        reopened = AuditLog(path)
        reopened.append(session_id="s1", actor="user", action="query_received")
        again = AuditLog(path)
        assert len(again.query()) == 4
        assert [r.target for r in again.query(action="routing_decision")] == ["t0", "t1", "t2"]

    def test_unknown_action_rejected(self):
        with pytest.raises(ValueError):
            AuditLog().append(session_id="s", actor="a", action="made_up_action")


class TestQuery:
    def test_empty_filter_result(self):
        log = AuditLog()
        assert log.query(action="tool_registered") == []

    def test_session_filter_partitions(self):
        log = AuditLog()
        _append(log, 3, session="a")
        _append(log, 2, session="b")
        assert len(log.query(session_id="a")) == 3  # partition oracle
        assert len(log.query(session_id="b")) == 2
        assert {r.session_id for r in log.query(session_id="a")} == {"a"}

    def test_time_range_filter(self):
        log = AuditLog()
        _append(log, 5)
        records = log.query()
        middle = records[2].timestamp
        assert all(r.timestamp >= middle for r in log.query(since=middle))
        assert all(r.timestamp <= middle for r in log.query(until=middle))

    def test_payload_stored_as_digest_by_default(self):
        log = AuditLog()
        log.append(session_id="s", actor="a", action="tool_result", payload={"big": "body"})
        record = log.query()[0]
        assert record.payload is None
        assert len(record.payload_digest) == 64

    def test_inline_payload_mode(self):
        log = AuditLog(inline_payloads=True)
        log.append(session_id="s", actor="a", action="tool_result", payload={"big": "body"})
        assert log.query()[0].payload == {"big": "body"}


class TestImmutability:
    def test_file_bytes_stable_across_rereads(self, tmp_path):
        path = tmp_path / "audit.log"
        log = AuditLog(path)
        _append(log, 10)
        first = path.read_bytes()
        assert path.read_bytes() == first
        log.query()
        log.query(action="routing_decision")
        assert path.read_bytes() == first
        _append(log, 1)
        assert path.read_bytes()[: len(first)] == first

    def test_returned_records_byte_identical_on_requery(self):
        log = AuditLog()
        _append(log, 5)
        first = [r.to_payload() for r in log.query()]
        second = [r.to_payload() for r in log.query()]
        assert first == second


class TestAuthorize:
    def test_read_only_role(self):
        roles = RoleTable()
        viewer = roles.get("viewer")
        assert authorize(viewer, VerbCategory.READ) is True
        assert authorize(viewer, VerbCategory.DELETE) is False
        assert authorize(viewer, VerbCategory.WRITE_MODIFY) is False

    def test_admin_holds_every_category(self):
        admin = RoleTable().get("admin")
        assert all(authorize(admin, category) for category in VerbCategory)

    def test_unknown_role_lookup(self):
        with pytest.raises(UnknownRole):
            RoleTable().get("superuser")

    def test_total_and_deterministic(self):
        roles = RoleTable()
        for name in roles.names():
            role = roles.get(name)
            for category in VerbCategory:
                assert authorize(role, category) == authorize(role, category)
                assert isinstance(authorize(role, category), bool)
