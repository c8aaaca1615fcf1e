"""Shared helpers: scripted scenarios, engine assembly, fixture scripts."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import pytest

from kubepilot.audit import AuditLog
from kubepilot.checkpoints import CheckpointStore, InMemoryCheckpointStore
from kubepilot.cluster.fake import FakeClusterBackend
from kubepilot.cluster.fixtures import seed_fixture
from kubepilot.codegen import CodegenPipeline
from kubepilot.engine import WorkflowEngine
from kubepilot.llm import LlmGateway, MockProvider, load_scenario
from kubepilot.querygate import QueryGateway
from kubepilot.registry import AgentRegistry
from kubepilot.roles import RoleTable
from kubepilot.sandbox import SandboxPolicy


def directive(payload: dict) -> str:
    """Render a directive block the way the mock LLM would reply."""
    return "<<<\n" + json.dumps(payload) + "\n>>>"


def entry(match: str, payload_or_text, **extra) -> dict:
    response = payload_or_text if isinstance(payload_or_text, str) else directive(payload_or_text)
    return {"match": match, "response": response, **extra}


def entry_all(matches: list[str], payload_or_text, **extra) -> dict:
    response = payload_or_text if isinstance(payload_or_text, str) else directive(payload_or_text)
    return {"match_all": matches, "response": response, **extra}


NEVER_MATCHING_ENTRY = {"match": "__unreachable_entry__", "response": "unused"}


def mock_gateway(entries: list[dict], strict: bool = False, **gateway_kwargs) -> LlmGateway:
    scenario = load_scenario({"strict": strict, "entries": entries or [NEVER_MATCHING_ENTRY]})
    return LlmGateway(MockProvider(scenario), **gateway_kwargs)


# classification replies reused across tests
ACCEPTED_READ = {
    "supported": True,
    "category": "read",
    "composite": True,
    "ambiguous": False,
    "namespaces": "ALL",
    "resource_kinds": ["pod"],
    "name_selectors": [],
    "hints": {},
}

UNSUPPORTED = {"supported": False}


# A vetted generated-tool script: marker-delimited entrypoint, scoped
# imports, guarded body, stdin->envelope contract.
GOOD_TOOL_SCRIPT = '''\
# ---BEGIN TOOL---
def summarize_job_failures(payload):
    """Count and echo the failed job names passed in."""
    try:
        names = payload.get("job_names", [])
        summary = {"failed_count": len(names), "jobs": sorted(names)}
        return {"status": "success", "data": summary}
    except Exception as exc:
        return {"status": "error", "data": None, "error": str(exc)}
# ---END TOOL---

if __name__ == "__main__":
    import json
    import sys
    print(json.dumps(summarize_job_failures(json.load(sys.stdin))))
'''

GOOD_TOOL_METADATA = {
    "function_name": "summarize_job_failures",
    "description": "Counts and echoes failed job names.",
    "tool_variable_name": "summarize_job_failures_tool",
    "input_schema": [{"name": "job_names", "type": "list-of-text", "required": False}],
}

# Same contract but the envelope lacks "data": evaluation must fail with
# schema_mismatch, which is retryable.
BAD_ENVELOPE_SCRIPT = '''\
# ---BEGIN TOOL---
def summarize_job_failures(payload):
    """Broken variant: envelope is missing the data field."""
    try:
        return {"status": "success"}
    except Exception as exc:
        return {"status": "error", "data": None, "error": str(exc)}
# ---END TOOL---

if __name__ == "__main__":
    import json
    import sys
    print(json.dumps(summarize_job_failures(json.load(sys.stdin))))
'''


def codegen_reply(script: str, test_args: dict | None = None) -> str:
    block = directive({"test_args": test_args or {}})
    return f"Here is the tool.\n```python\n{script}```\n{block}"


@dataclass
class Harness:
    llm: LlmGateway
    backend: FakeClusterBackend
    audit: AuditLog
    checkpoints: CheckpointStore
    registry: AgentRegistry
    codegen: CodegenPipeline
    engine: WorkflowEngine
    roles: RoleTable


def build_harness(
    entries: list[dict],
    *,
    fixture: str = "demo",
    strict: bool = False,
    checkpoints: CheckpointStore | None = None,
    registry_dir: Path | None = None,
    artifacts_dir: Path | None = None,
    audit_path: Path | None = None,
    human_input_source=None,
    cache_enabled: bool = True,
    semantic_mode: str = "advisory",
) -> Harness:
    llm = mock_gateway(entries, strict=strict, cache_enabled=cache_enabled)
    backend = FakeClusterBackend(seed_fixture(fixture))
    audit = AuditLog(audit_path)
    stores = checkpoints if checkpoints is not None else InMemoryCheckpointStore()
    roles = RoleTable()
    registry = AgentRegistry(
        llm=llm,
        backend=backend,
        audit=audit,
        storage_dir=registry_dir,
        sandbox_policy=SandboxPolicy(wall_timeout_ms=10_000),
    ).register_agents()
    codegen = CodegenPipeline(
        llm=llm,
        registry=registry,
        artifacts_dir=artifacts_dir,
        audit=audit,
        semantic_mode=semantic_mode,
    )
    engine = WorkflowEngine(
        llm=llm,
        query_gateway=QueryGateway(llm),
        registry=registry,
        checkpoints=stores,
        roles=roles,
        codegen=codegen,
        audit=audit,
        human_input_source=human_input_source,
    )
    return Harness(
        llm=llm,
        backend=backend,
        audit=audit,
        checkpoints=stores,
        registry=registry,
        codegen=codegen,
        engine=engine,
        roles=roles,
    )


@pytest.fixture
def demo_backend() -> FakeClusterBackend:
    return FakeClusterBackend(seed_fixture("demo"))
