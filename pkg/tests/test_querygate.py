"""Query validation: classification wiring, policy gate, pre-filter."""

from __future__ import annotations

import pytest

from conftest import ACCEPTED_READ, UNSUPPORTED, entry, mock_gateway
from kubepilot.cluster.model import VerbCategory
from kubepilot.errors import LlmFailure
from kubepilot.querygate import (
    REJECT_PERMISSION,
    REJECT_UNSUPPORTED,
    QueryGateway,
    StructuredQuery,
)
from kubepilot.roles import RoleTable


@pytest.fixture
def roles() -> RoleTable:
    return RoleTable()


def gateway_with(reply: dict) -> QueryGateway:
    return QueryGateway(mock_gateway([entry("## classify-query", reply)]))


class TestValidateQuery:
    def test_privileged_intent_rejected_for_read_only_role(self, roles):
        reply = {
            "supported": True,
            "category": "write_modify",
            "composite": False,
            "namespaces": ["demo"],
            "resource_kinds": ["secret"],
        }
        query = gateway_with(reply).validate_query(
            "create a secret in ns demo", roles.get("viewer")
        )
        assert query.status == "rejected"
        assert query.rejection_reason == REJECT_PERMISSION

    def test_same_query_accepted_for_admin(self, roles):
        reply = {
            "supported": True,
            "category": "write_modify",
            "composite": False,
            "namespaces": ["demo"],
            "resource_kinds": ["secret"],
        }
        query = gateway_with(reply).validate_query(
            "create a secret in ns demo", roles.get("admin")
        )
        assert query.status == "accepted"
        assert query.intent_category == VerbCategory.WRITE_MODIFY

    def test_greeting_rejected_as_unsupported(self, roles):
        query = gateway_with(UNSUPPORTED).validate_query("hello there", roles.get("admin"))
        assert query.status == "rejected"
        assert query.rejection_reason == REJECT_UNSUPPORTED

    def test_composite_read_query_accepted_with_all_namespaces(self, roles):
        query = gateway_with(ACCEPTED_READ).validate_query(
            "List all pods and identify those with errors in each namespace",
            roles.get("admin"),
        )
        assert query.status == "accepted"
        assert query.composite is True
        assert query.intent_category == VerbCategory.READ
        assert query.scope.namespaces == "ALL"

    def test_ambiguous_query_needs_clarification(self, roles):
        reply = {
            "supported": True,
            "category": "read",
            "ambiguous": True,
            "clarification": "Which namespace do you mean?",
        }
        query = gateway_with(reply).validate_query("show me the logs", roles.get("viewer"))
        assert query.status == "needs_clarification"
        assert query.clarification_prompt == "Which namespace do you mean?"

    def test_prefilter_short_input_skips_llm(self, roles):
        gate = QueryGateway(mock_gateway([]))  # no entries: any LLM call would fail
        query = gate.validate_query("hi", roles.get("admin"))
        assert query.status == "rejected"
        assert query.rejection_reason == REJECT_UNSUPPORTED
        assert gate.llm.provider_invocations == 0

    def test_prefilter_nonprintable_ratio(self, roles):
        gate = QueryGateway(mock_gateway([]))
        garbled = "ab \x00\x01\x02\x03\x04\x05\x06\x07"
        query = gate.validate_query(garbled, roles.get("admin"))
        assert query.status == "rejected"
        assert query.rejection_reason == REJECT_UNSUPPORTED

    def test_empty_query_is_a_caller_error(self, roles):
        with pytest.raises(ValueError):
            QueryGateway(mock_gateway([])).validate_query("   ", roles.get("admin"))

    def test_unknown_category_is_llm_failure(self, roles):
        reply = {"supported": True, "category": "teleport"}
        with pytest.raises(LlmFailure):
            gateway_with(reply).validate_query("do the thing please", roles.get("admin"))

    def test_missing_directive_is_llm_failure(self, roles):
        gate = QueryGateway(
            mock_gateway([entry("## classify-query", "no directive block here")])
        )
        with pytest.raises(LlmFailure):
            gate.validate_query("list the pods please", roles.get("admin"))


class TestPolicyProperties:
    CATEGORIES = [c.value for c in VerbCategory]

    @pytest.mark.parametrize("category", CATEGORIES)
    def test_permission_monotonicity(self, roles, category):
        # identical LLM classification; wider role must not be permission-rejected
        reply = {"supported": True, "category": category, "namespaces": ["demo"]}
        narrow = gateway_with(reply).validate_query(
            "perform the operation on demo", roles.get("viewer")
        )
        wide = gateway_with(reply).validate_query(
            "perform the operation on demo", roles.get("admin")
        )
        if narrow.status == "accepted":
            assert wide.status == "accepted"
        assert not (
            wide.status == "rejected" and wide.rejection_reason == REJECT_PERMISSION
        )

    def test_accepted_queries_never_carry_rejection_reason(self, roles):
        query = gateway_with(ACCEPTED_READ).validate_query(
            "List all pods in all namespaces", roles.get("admin")
        )
        assert query.status == "accepted"
        assert query.rejection_reason is None

    def test_structured_query_invariants(self):
        with pytest.raises(ValueError):
            StructuredQuery(raw_text="x", role_name="admin", status="rejected")
        with pytest.raises(ValueError):
            StructuredQuery(raw_text="x", role_name="admin", status="needs_clarification")
        with pytest.raises(ValueError):
            StructuredQuery(raw_text="x", role_name="admin", status="accepted")

    def test_policy_gate_runs_after_classification_only_downgrades(self, roles):
        # unsupported stays unsupported even for a role missing the category
        query = gateway_with(UNSUPPORTED).validate_query(
            "delete everything right now", roles.get("viewer")
        )
        assert query.rejection_reason == REJECT_UNSUPPORTED

    def test_serialization_roundtrip(self, roles):
        query = gateway_with(ACCEPTED_READ).validate_query(
            "List all pods in every namespace", roles.get("admin")
        )
        restored = StructuredQuery.from_payload(query.to_payload())
        assert restored.to_payload() == query.to_payload()
