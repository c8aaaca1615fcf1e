"""Registry of the ten specialized agents and their tools.

Owns tool lookup, LLM-driven tool selection and argument binding, dispatch
(builtin handlers against the cluster backend, generated scripts through
the sandbox), and hot registration of generated tools with idempotency,
versioning, and directory-backed persistence.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from . import prompts
from .audit import AuditLog, authorize, digest_payload
from .cluster.model import VerbCategory
from .directives import DirectiveError, extract_block
from .errors import (
    AgentFault,
    DuplicateAgent,
    InvalidSelection,
    LlmFailure,
    MissingAgent,
    NameCollision,
    NotFound,
    SchemaViolation,
    StorageFault,
)
from .llm import LlmGateway, simple_request
from .llm.types import LlmRequest, Message
from .sandbox import SandboxPolicy, execute_script
from .tooling import (
    AGENT_NAMES,
    AgentDescriptor,
    DispatchContext,
    FieldSpec,
    ToolResult,
    ToolSpec,
)
from .tools_builtin import HANDLERS, TABLE_AGENTS, ToolEnv

logger = logging.getLogger(__name__)

SELECTION_RETRIES = 2  # extra attempts after a malformed/unknown selection


@dataclass
class GeneratedToolRecord:
    spec: ToolSpec
    script_text: str
    content_digest: str


class AgentRegistry:
    def __init__(
        self,
        llm: LlmGateway,
        backend: Any,
        audit: AuditLog | None = None,
        storage_dir: str | Path | None = None,
        versioning: bool = True,
        sandbox_policy: SandboxPolicy | None = None,
        interpreter: list[str] | None = None,
    ):
        self.llm = llm
        self.backend = backend
        self.audit = audit
        self.versioning = versioning
        self.sandbox_policy = sandbox_policy or SandboxPolicy()
        self.interpreter = interpreter
        self.storage_dir = Path(storage_dir) if storage_dir else None
        self._agents: dict[str, AgentDescriptor] = {}
        self._tools: dict[str, ToolSpec] = {}
        self._generated: dict[str, GeneratedToolRecord] = {}
        self._write_lock = threading.Lock()

    # -- registration ---------------------------------------------------------

    def register_agents(self, descriptors: list[AgentDescriptor] | None = None) -> "AgentRegistry":
        descriptors = descriptors if descriptors is not None else TABLE_AGENTS
        names = [d.name for d in descriptors]
        duplicates = {n for n in names if names.count(n) > 1}
        if duplicates:
            raise DuplicateAgent(f"duplicate agent descriptors: {sorted(duplicates)}")
        missing = set(AGENT_NAMES) - set(names)
        if missing:
            raise MissingAgent(f"missing agent descriptors: {sorted(missing)}")
        unexpected = set(names) - set(AGENT_NAMES)
        if unexpected:
            raise MissingAgent(f"unknown agent names: {sorted(unexpected)}")

        for descriptor in descriptors:
            # own a copy: generated-tool registration appends to tool_names
            self._agents[descriptor.name] = AgentDescriptor(
                name=descriptor.name,
                description=descriptor.description,
                tool_names=list(descriptor.tool_names),
                prompt_template=descriptor.prompt_template,
            )
        for tool in self._builtin_tools():
            self._tools[tool.name] = tool
        for descriptor in descriptors:
            for tool_name in descriptor.tool_names:
                if tool_name not in self._tools:
                    raise MissingAgent(
                        f"agent {descriptor.name} references unknown tool {tool_name!r}"
                    )
        if self.storage_dir is not None:
            self._load_persisted()
        return self

    @staticmethod
    def _builtin_tools() -> list[ToolSpec]:
        from .tools_builtin import BUILTIN_TOOLS

        return list(BUILTIN_TOOLS)

    def agent(self, name: str) -> AgentDescriptor:
        try:
            return self._agents[name]
        except KeyError:
            raise MissingAgent(f"agent {name!r} is not registered") from None

    def agent_names(self) -> list[str]:
        return sorted(self._agents)

    def agent_summaries(self) -> list[tuple[str, str]]:
        return [(n, self._agents[n].description) for n in sorted(self._agents)]

    def has_agent(self, name: str) -> bool:
        return name in self._agents

    def tool(self, name: str) -> ToolSpec:
        try:
            return self._tools[name]
        except KeyError:
            raise NotFound(f"tool {name!r} is not registered") from None

    def list_tools(
        self, agent: str | None = None, origin: str | None = None
    ) -> list[ToolSpec]:
        tools = [
            t
            for t in self._tools.values()
            if (agent is None or t.owner_agent == agent)
            and (origin is None or t.origin == origin)
        ]
        return sorted(tools, key=lambda t: (t.owner_agent, t.name))

    # -- LLM-driven selection and binding --------------------------------------

    def match_tool(self, agent_name: str, task_text: str) -> ToolSpec | None:
        """Select a tool for the task, or None when nothing fits (NoMatch)."""
        descriptor = self.agent(agent_name)
        tool_summaries = [
            (name, self._tools[name].description) for name in descriptor.tool_names
        ]
        feedback: str | None = None
        for _ in range(1 + SELECTION_RETRIES):
            prompt = prompts.select_tool(agent_name, task_text, tool_summaries, feedback)
            request = LlmRequest(
                messages=[Message("system", descriptor.prompt_template), Message("user", prompt)]
                if descriptor.prompt_template
                else [Message("user", prompt)],
                purpose_tag="route",
            )
            try:
                response = self.llm.complete(request)
            except Exception as exc:
                raise LlmFailure(f"tool selection failed: {exc}") from exc
            try:
                directive = extract_block(response.content)
            except DirectiveError as exc:
                feedback = str(exc)
                continue
            selection = directive.get("tool")
            if selection is None:
                return None
            if selection in descriptor.tool_names:
                return self._tools[selection]
            feedback = f"{selection!r} is not one of this agent's tools"
        raise InvalidSelection(
            f"agent {agent_name}: no valid tool selection after retries ({feedback})"
        )

    def extract_arguments(self, tool: ToolSpec, task_text: str) -> dict[str, Any]:
        """One LLM call binds arguments from task text; validated afterwards."""
        if not tool.input_schema:
            return {}
        prompt = prompts.extract_args(tool.name, task_text, tool.schema_payload())
        try:
            response = self.llm.complete(simple_request(prompt, purpose="metadata"))
            directive = extract_block(response.content)
        except Exception as exc:  # LLM and parse faults surface identically here
            raise LlmFailure(f"argument extraction failed: {exc}") from exc
        arguments = directive.get("arguments")
        if not isinstance(arguments, dict):
            raise LlmFailure("argument directive lacks an 'arguments' object")
        return arguments

    # -- dispatch ----------------------------------------------------------------

    def dispatch(
        self,
        tool: ToolSpec,
        arguments: dict[str, Any],
        context: DispatchContext | None = None,
    ) -> ToolResult:
        context = context or DispatchContext()
        tool.validate_arguments(arguments)

        if context.role is not None and not authorize(context.role, tool.category):
            result = ToolResult(
                status="error",
                error_message=(
                    f"role {context.role.name!r} lacks the {tool.category.value} category"
                ),
                produced_at_step=context.step,
            )
            self._audit_dispatch(tool, arguments, context, result)
            return result

        if self.audit is not None:
            self.audit.append(
                session_id=context.session_id,
                actor=f"agent:{tool.owner_agent}",
                action="tool_dispatched",
                target=tool.name,
                payload={"arguments": arguments},
                outcome="started",
            )
        try:
            if tool.origin == "builtin":
                result = self._dispatch_builtin(tool, arguments)
            else:
                result = self._dispatch_generated(tool, arguments)
        except SchemaViolation:
            raise
        except Exception as exc:
            raise AgentFault(f"tool {tool.name} raised internally: {exc}") from exc
        result.produced_at_step = context.step
        self._audit_dispatch(tool, arguments, context, result)
        return result

    def _dispatch_builtin(self, tool: ToolSpec, arguments: dict[str, Any]) -> ToolResult:
        handler = HANDLERS.get(tool.artifact)
        if handler is None:
            raise AgentFault(f"builtin tool {tool.name} has no handler")
        env = ToolEnv(backend=self.backend, audit=self.audit)
        try:
            data = handler(env, arguments)
        except Exception as exc:
            # cluster-level failures become error results, not engine crashes
            return ToolResult(status="error", error_message=str(exc))
        return ToolResult(status="success", data=data)

    def _dispatch_generated(self, tool: ToolSpec, arguments: dict[str, Any]) -> ToolResult:
        record = self._generated.get(tool.name)
        if record is None:
            raise AgentFault(f"generated tool {tool.name} has no stored script")
        sandbox_result = execute_script(
            record.script_text, arguments, self.sandbox_policy, self.interpreter
        )
        if sandbox_result.violations:
            return ToolResult(
                status="error",
                error_message=f"sandbox violations: {', '.join(sandbox_result.violations)}",
            )
        try:
            envelope = json.loads(sandbox_result.stdout)
            status = envelope["status"]
            data = envelope.get("data")
        except (json.JSONDecodeError, KeyError, TypeError):
            return ToolResult(
                status="error",
                error_message="generated tool emitted no parseable envelope",
            )
        if status not in ("success", "error"):
            return ToolResult(
                status="error", error_message=f"generated tool emitted status {status!r}"
            )
        if status == "error":
            return ToolResult(
                status="error",
                data=data,
                error_message=str(envelope.get("error") or "generated tool reported an error"),
            )
        return ToolResult(status="success", data=data)

    def _audit_dispatch(
        self,
        tool: ToolSpec,
        arguments: dict[str, Any],
        context: DispatchContext,
        result: ToolResult,
    ) -> None:
        if self.audit is None:
            return
        self.audit.append(
            session_id=context.session_id,
            actor=f"tool:{tool.name}",
            action="tool_result",
            target=tool.name,
            payload=result.to_payload(),
            outcome=result.status,
        )

    # -- generated tool registration ------------------------------------------------

    def register_generated_tool(
        self,
        name: str,
        description: str,
        input_schema: list[FieldSpec],
        script_text: str,
        owner_agent: str = "CodeGenerator",
        session_id: str = "",
    ) -> ToolSpec:
        content_digest = digest_payload(
            {
                "script": script_text,
                "description": description,
                "schema": [f.to_payload() for f in input_schema],
            }
        )
        with self._write_lock:
            existing = self._generated.get(name)
            if existing is not None and existing.content_digest == content_digest:
                return existing.spec
            if name in self._tools and existing is None:
                raise NameCollision(f"{name!r} collides with a builtin tool")
            if existing is not None and not self.versioning:
                raise NameCollision(
                    f"{name!r} already registered with different content and versioning is off"
                )
            version = existing.spec.version + 1 if existing is not None else 1
            spec = ToolSpec(
                name=name,
                description=description,
                input_schema=list(input_schema),
                owner_agent=owner_agent,
                category=VerbCategory.CUSTOM_ADVANCED,
                origin="generated",
                version=version,
                artifact=self._persist_generated(name, script_text, description, input_schema,
                                                 owner_agent, version, content_digest),
            )
            record = GeneratedToolRecord(
                spec=spec, script_text=script_text, content_digest=content_digest
            )
            self._generated[name] = record
            self._tools[name] = spec
            owner = self._agents.get(owner_agent)
            if owner is not None and name not in owner.tool_names:
                owner.tool_names.append(name)
        if self.audit is not None:
            self.audit.append(
                session_id=session_id,
                actor="registry",
                action="tool_registered",
                target=name,
                payload={"version": version, "digest": content_digest},
                outcome="registered",
            )
        return spec

    def _persist_generated(
        self,
        name: str,
        script_text: str,
        description: str,
        input_schema: list[FieldSpec],
        owner_agent: str,
        version: int,
        content_digest: str,
    ) -> str:
        if self.storage_dir is None:
            return f"memory:{name}"
        tool_dir = self.storage_dir / name
        try:
            tool_dir.mkdir(parents=True, exist_ok=True)
            script_path = tool_dir / "script.py"
            script_path.write_text(script_text)
            manifest = {
                "name": name,
                "description": description,
                "schema": [f.to_payload() for f in input_schema],
                "owner_agent": owner_agent,
                "origin": "generated",
                "version": version,
                "content_digest": content_digest,
                "created_at": time.time(),
                "llm_produced": True,
            }
            (tool_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
            self._rewrite_index()
            return str(script_path)
        except OSError as exc:
            raise StorageFault(f"cannot persist tool {name}: {exc}") from exc

    def _rewrite_index(self) -> None:
        assert self.storage_dir is not None
        entries = sorted(
            path.name for path in self.storage_dir.iterdir() if (path / "manifest.json").exists()
        )
        (self.storage_dir / "index.json").write_text(json.dumps({"tools": entries}, indent=2))

    def _load_persisted(self) -> None:
        assert self.storage_dir is not None
        index_path = self.storage_dir / "index.json"
        if not index_path.exists():
            return
        try:
            entries = json.loads(index_path.read_text()).get("tools", [])
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageFault(f"registry index unreadable: {exc}") from exc
        for name in entries:
            tool_dir = self.storage_dir / name
            try:
                manifest = json.loads((tool_dir / "manifest.json").read_text())
                script_text = (tool_dir / "script.py").read_text()
            except (OSError, json.JSONDecodeError) as exc:
                raise StorageFault(f"persisted tool {name} unreadable: {exc}") from exc
            spec = ToolSpec(
                name=manifest["name"],
                description=manifest["description"],
                input_schema=[FieldSpec.from_payload(f) for f in manifest["schema"]],
                owner_agent=manifest.get("owner_agent", "CodeGenerator"),
                category=VerbCategory.CUSTOM_ADVANCED,
                origin="generated",
                version=int(manifest.get("version", 1)),
                artifact=str(tool_dir / "script.py"),
            )
            self._generated[spec.name] = GeneratedToolRecord(
                spec=spec,
                script_text=script_text,
                content_digest=manifest.get("content_digest", ""),
            )
            self._tools[spec.name] = spec
            owner = self._agents.get(spec.owner_agent)
            if owner is not None and spec.name not in owner.tool_names:
                owner.tool_names.append(spec.name)
            logger.info("loaded persisted generated tool %s v%d", spec.name, spec.version)
