"""Assembly of the full system from settings."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from .audit import AuditLog
from .checkpoints import CheckpointStore, FileCheckpointStore, InMemoryCheckpointStore
from .cluster.fake import FakeClusterBackend
from .cluster.fixtures import seed_fixture
from .cluster.real import RealClusterAdapter
from .codegen import CodegenPipeline
from .config import Settings, TokenTable
from .engine import WorkflowEngine
from .llm import HttpChatProvider, LlmGateway, MockProvider, load_scenario
from .llm.types import LlmRequest, LlmResponse
from .querygate import QueryGateway
from .registry import AgentRegistry
from .roles import DEFAULT_ROLES, RoleTable, load_roles


@dataclass
class System:
    settings: Settings
    llm: LlmGateway
    roles: RoleTable
    backend: object
    audit: AuditLog
    checkpoints: CheckpointStore
    registry: AgentRegistry
    codegen: CodegenPipeline
    engine: WorkflowEngine
    tokens: TokenTable | None = None

    def health(self) -> dict:
        components = {
            "provider": self._provider_ok(),
            "checkpoint_store": self._checkpoints_ok(),
            "registry": len(self.registry.agent_names()) == 10,
        }
        status = "ok" if all(components.values()) else "degraded"
        return {"status": status, "components": components}

    def _provider_ok(self) -> bool:
        provider = self.llm.provider
        if isinstance(provider, MockProvider):
            return bool(provider.scenario.entries)
        if isinstance(provider, HttpChatProvider):
            return provider.ping()
        return provider is not None

    def _checkpoints_ok(self) -> bool:
        if isinstance(self.checkpoints, FileCheckpointStore):
            path = self.checkpoints.path
            return path.exists() and os.access(path, os.W_OK)
        return True


def build_system(settings: Settings | None = None) -> System:
    settings = settings or Settings.from_env()

    if settings.mock_scenario_path:
        provider = MockProvider(load_scenario(Path(settings.mock_scenario_path)))
    elif settings.provider_url:
        provider = HttpChatProvider(
            settings.provider_url, settings.provider_key, settings.model_id
        )
    else:
        # no provider configured: an empty strict mock fails fast and loudly
        provider = MockProvider(
            load_scenario({"strict": False, "entries": [{"match": "__no_provider_configured__", "response": ""}]})
        )

    audit = AuditLog(settings.audit_path or None)

    def audit_llm(request: LlmRequest, response: LlmResponse) -> None:
        audit.append(
            session_id="",
            actor="llm-gateway",
            action="llm_call",
            target=request.purpose_tag,
            payload={
                "prompt_preview": request.rendered()[:400],
                "from_cache": response.from_cache,
            },
            outcome="cached" if response.from_cache else "completed",
        )

    llm = LlmGateway(provider, audit_hook=audit_llm)

    roles = load_roles(Path(settings.roles_path)) if settings.roles_path else RoleTable(DEFAULT_ROLES)

    kind, _, argument = settings.backend.partition(":")
    if kind == "real":
        backend = RealClusterAdapter(argument)
    else:
        backend = FakeClusterBackend(seed_fixture(argument or "demo"))

    checkpoints: CheckpointStore = (
        FileCheckpointStore(settings.checkpoint_path)
        if settings.checkpoint_path
        else InMemoryCheckpointStore()
    )

    registry = AgentRegistry(
        llm=llm,
        backend=backend,
        audit=audit,
        storage_dir=settings.registry_dir or None,
    ).register_agents()

    codegen = CodegenPipeline(
        llm=llm,
        registry=registry,
        artifacts_dir=settings.artifacts_dir or None,
        audit=audit,
    )

    engine = WorkflowEngine(
        llm=llm,
        query_gateway=QueryGateway(llm),
        registry=registry,
        checkpoints=checkpoints,
        roles=roles,
        codegen=codegen,
        audit=audit,
    )

    tokens = TokenTable.load(settings.auth_tokens_path) if settings.auth_tokens_path else None

    return System(
        settings=settings,
        llm=llm,
        roles=roles,
        backend=backend,
        audit=audit,
        checkpoints=checkpoints,
        registry=registry,
        codegen=codegen,
        engine=engine,
        tokens=tokens,
    )
