"""Generate → test → evaluate → register pipeline for runtime tool synthesis.

Each run walks a fixed stage graph with bounded retries:

    generate_code -> test_code -> evaluate_test_results
        -> (pass) generate_metadata -> register_tool -> finish
        -> (fail) handle_failure -> generate_code (retry) | finish (abort)

Evaluation is deliberately separated from execution: it sees only the
script text and the SandboxResult, never a sandbox handle. Failure context
is preserved per attempt under an artifacts directory for audit.
"""

from __future__ import annotations

import copy
import json
import re
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import prompts
from .audit import AuditLog
from .directives import DirectiveError, extract_block
from .errors import (
    EmptyGeneration,
    KubepilotError,
    LlmFailure,
    MetadataMismatch,
    SandboxUnavailable,
)
from .llm import LlmGateway, simple_request
from .recordlog import canonical_json
from .registry import AgentRegistry
from .sandbox import SandboxPolicy, SandboxResult, execute_script, static_scan
from .tooling import FieldSpec, ToolSpec

BEGIN_MARKER = "# ---BEGIN TOOL---"
END_MARKER = "# ---END TOOL---"

MAX_ATTEMPTS = 3

FAILURE_REASONS = (
    "not_parseable_output",
    "schema_mismatch",
    "missing_markers",
    "policy_violation",
    "runtime_error",
    "timeout",
    "semantic_mismatch",
)

STAGES = (
    "generate_code",
    "test_code",
    "evaluate_test_results",
    "generate_metadata",
    "register_tool",
    "handle_failure",
    "finish",
)

# legal edges of the stage graph, used by tests to verify observed paths
STAGE_GRAPH: dict[str, tuple[str, ...]] = {
    "generate_code": ("test_code", "handle_failure"),
    "test_code": ("evaluate_test_results", "handle_failure"),
    "evaluate_test_results": ("generate_metadata", "handle_failure"),
    "generate_metadata": ("register_tool", "handle_failure"),
    "register_tool": ("finish", "handle_failure"),
    "handle_failure": ("generate_code", "finish"),
    "finish": (),
}

_FENCE_RE = re.compile(r"```python\s*\n(.*?)```", re.DOTALL)
_DEF_RE = re.compile(r"^\s*def\s+([A-Za-z_]\w*)\s*\(", re.MULTILINE)


@dataclass
class CandidateScript:
    source_text: str
    task_description: str
    attempt: int
    entrypoint_name: str


@dataclass
class Verdict:
    passed: bool
    failure_reasons: list[str] = field(default_factory=list)
    notes: str = ""

    def __post_init__(self) -> None:
        if self.passed and self.failure_reasons:
            raise ValueError("a passing verdict cannot carry failure reasons")

    def to_payload(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "failure_reasons": list(self.failure_reasons),
            "notes": self.notes,
        }


@dataclass
class ToolMetadata:
    function_name: str
    input_schema: list[FieldSpec]
    tool_variable_name: str
    description: str
    owner_agent: str = "CodeGenerator"

    def to_payload(self) -> dict[str, Any]:
        return {
            "function_name": self.function_name,
            "input_schema": [f.to_payload() for f in self.input_schema],
            "tool_variable_name": self.tool_variable_name,
            "description": self.description,
            "owner_agent": self.owner_agent,
        }


@dataclass
class PipelineRun:
    run_id: str
    stage: str = "generate_code"
    attempts_used: int = 0
    outcome: str = ""  # registered | aborted
    artifacts: dict[str, Any] = field(default_factory=dict)
    stages_visited: list[str] = field(default_factory=list)
    registered_tool: ToolSpec | None = None
    abort_cause: str = ""


_BLOCK_SPAN_RE = re.compile(r"^<<<\s*$.*?^>>>\s*$", re.DOTALL | re.MULTILINE)


def extract_script(response_text: str) -> tuple[str, dict[str, Any]]:
    """Split a generation response into (script text, test args)."""
    fence = _FENCE_RE.search(response_text)
    if fence:
        script = fence.group(1)
    else:
        # no fence: treat the prose minus any directive blocks as the script
        script = _BLOCK_SPAN_RE.sub("", response_text)
    test_args: dict[str, Any] = {}
    try:
        directive = extract_block(response_text)
        if isinstance(directive.get("test_args"), dict):
            test_args = directive["test_args"]
    except DirectiveError:
        pass
    return script.strip("\n"), test_args


def parse_entrypoint(source_text: str) -> str:
    """Name of the function between the marker comments; '' when absent."""
    begin = source_text.find(BEGIN_MARKER)
    end = source_text.find(END_MARKER)
    if begin == -1 or end == -1 or end <= begin:
        return ""
    section = source_text[begin:end]
    match = _DEF_RE.search(section)
    return match.group(1) if match else ""


class CodegenPipeline:
    def __init__(
        self,
        llm: LlmGateway,
        registry: AgentRegistry,
        sandbox_policy: SandboxPolicy | None = None,
        interpreter: list[str] | None = None,
        artifacts_dir: str | Path | None = None,
        audit: AuditLog | None = None,
        semantic_mode: str = "advisory",  # off | advisory | strict
        stage_listener: Callable[[str, "PipelineRun"], None] | None = None,
    ):
        if semantic_mode not in ("off", "advisory", "strict"):
            raise ValueError(f"unknown semantic_mode {semantic_mode!r}")
        self.llm = llm
        self.registry = registry
        self.sandbox_policy = sandbox_policy or SandboxPolicy()
        self.interpreter = interpreter
        self.artifacts_dir = Path(artifacts_dir) if artifacts_dir else None
        self.audit = audit
        self.semantic_mode = semantic_mode
        self.stage_listener = stage_listener

    def with_stage_listener(
        self, listener: Callable[[str, "PipelineRun"], None]
    ) -> "CodegenPipeline":
        """Shallow copy bound to another stage listener (per-run hook)."""
        clone = copy.copy(self)
        clone.stage_listener = listener
        return clone

    # -- stages ------------------------------------------------------------------

    def generate_code(
        self,
        task: str,
        context_summary: str,
        attempt: int,
        prior_failures: list[str] | None = None,
    ) -> tuple[CandidateScript, dict[str, Any], str]:
        if not task.strip():
            raise ValueError("task must be non-empty")
        prompt = prompts.generate_tool(
            task, context_summary, (BEGIN_MARKER, END_MARKER), attempt, prior_failures
        )
        try:
            response = self.llm.complete(simple_request(prompt, purpose="codegen"))
        except Exception as exc:
            raise LlmFailure(f"code generation call failed: {exc}") from exc
        script_text, test_args = extract_script(response.content)
        if not script_text.strip():
            raise EmptyGeneration("generation produced no script text")
        candidate = CandidateScript(
            source_text=script_text,
            task_description=task,
            attempt=attempt,
            entrypoint_name=parse_entrypoint(script_text),
        )
        return candidate, test_args, prompt

    def test_code(
        self, script: CandidateScript, test_args: dict[str, Any] | None = None
    ) -> SandboxResult:
        """Run the candidate in the sandbox; script failures never raise."""
        return execute_script(
            script.source_text, test_args or {}, self.sandbox_policy, self.interpreter
        )

    def evaluate_test_results(self, script: CandidateScript, result: SandboxResult) -> Verdict:
        """Structural and policy checks over source text and captured output only."""
        reasons: list[str] = []
        notes: list[str] = []

        envelope = None
        try:
            envelope = json.loads(result.stdout)
            if not isinstance(envelope, dict):
                reasons.append("not_parseable_output")
                notes.append("stdout is valid JSON but not an object")
        except json.JSONDecodeError:
            reasons.append("not_parseable_output")
            notes.append("stdout is not a single JSON document")

        if isinstance(envelope, dict) and ("status" not in envelope or "data" not in envelope):
            reasons.append("schema_mismatch")
            missing = {"status", "data"} - set(envelope)
            notes.append(f"envelope missing {sorted(missing)}")

        if (
            BEGIN_MARKER not in script.source_text
            or END_MARKER not in script.source_text
            or not parse_entrypoint(script.source_text)
        ):
            reasons.append("missing_markers")
            notes.append("entrypoint marker comments absent or empty")

        findings = static_scan(script.source_text, self.sandbox_policy)
        if findings:
            reasons.append("policy_violation")
            notes.append(
                "denylisted tokens: "
                + ", ".join(f"{f.token}@{f.line}" for f in findings[:5])
            )

        for violation in result.violations:
            if violation == "timeout":
                reason = "timeout"
            elif violation in ("fs_escape", "network_attempt", "env_access"):
                reason = "policy_violation"
            else:  # output_cap
                reason = "runtime_error"
            if reason not in reasons:
                reasons.append(reason)
                notes.append(f"sandbox violation: {violation}")
        if not result.exit_ok and "timeout" not in result.violations and "runtime_error" not in reasons:
            reasons.append("runtime_error")
            notes.append(f"script exited abnormally: {result.stderr.strip()[-200:]}")

        if self.semantic_mode != "off" and not reasons:
            aligned, semantic_note = self._semantic_check(script, envelope)
            notes.append(semantic_note)
            if aligned is False and self.semantic_mode == "strict":
                reasons.append("semantic_mismatch")

        return Verdict(passed=not reasons, failure_reasons=reasons, notes="; ".join(notes))

    def _semantic_check(
        self, script: CandidateScript, envelope: dict[str, Any] | None
    ) -> tuple[bool | None, str]:
        preview = canonical_json((envelope or {}).get("data"))[:500]
        prompt = prompts.semantic_check(script.task_description, preview)
        try:
            response = self.llm.complete(simple_request(prompt, purpose="validate"))
            directive = extract_block(response.content)
            aligned = bool(directive.get("aligned", False))
            return aligned, f"semantic check: aligned={aligned} ({directive.get('notes', '')})"
        except (KubepilotError, DirectiveError) as exc:
            return None, f"semantic check unavailable: {exc}"

    def generate_metadata(self, script: CandidateScript) -> ToolMetadata:
        prompt = prompts.extract_metadata(script.source_text)
        try:
            response = self.llm.complete(simple_request(prompt, purpose="metadata"))
            directive = extract_block(response.content)
        except DirectiveError as exc:
            raise LlmFailure(f"metadata directive unparseable: {exc}") from exc
        except Exception as exc:
            raise LlmFailure(f"metadata call failed: {exc}") from exc

        function_name = str(directive.get("function_name", ""))
        parsed = parse_entrypoint(script.source_text)
        if not function_name or function_name != parsed:
            raise MetadataMismatch(
                f"metadata names {function_name!r} but the script entrypoint is {parsed!r}"
            )
        try:
            schema = [FieldSpec.from_payload(f) for f in directive.get("input_schema", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise MetadataMismatch(f"input schema invalid: {exc}") from exc
        description = str(directive.get("description", "")).strip()
        if not description:
            raise MetadataMismatch("metadata description must be non-empty")
        return ToolMetadata(
            function_name=function_name,
            input_schema=schema,
            tool_variable_name=str(directive.get("tool_variable_name", function_name)),
            description=description,
            owner_agent=str(directive.get("owner_agent", "CodeGenerator")),
        )

    def register_tool(
        self, metadata: ToolMetadata, script: CandidateScript, session_id: str = ""
    ) -> ToolSpec:
        return self.registry.register_generated_tool(
            name=metadata.function_name,
            description=metadata.description,
            input_schema=metadata.input_schema,
            script_text=script.source_text,
            owner_agent=metadata.owner_agent,
            session_id=session_id,
        )

    @staticmethod
    def handle_failure(run: PipelineRun, failure: Exception | Verdict) -> str:
        """Decide retry or abort; infrastructure faults never retry."""
        retryable = not isinstance(failure, (SandboxUnavailable,)) and not (
            isinstance(failure, Exception) and run.stage == "register_tool"
        )
        if retryable and run.attempts_used < MAX_ATTEMPTS:
            return "retry"
        return "abort"

    # -- orchestration ----------------------------------------------------------------

    def run_pipeline(
        self,
        task: str,
        context_summary: str = "",
        approval_hook: Callable[[str], bool] | None = None,
        session_id: str = "",
    ) -> PipelineRun:
        run = PipelineRun(run_id=uuid.uuid4().hex)

        if approval_hook is not None:
            approved = approval_hook(f"Approve generation of a new tool for: {task}?")
            if not approved:
                run.abort_cause = "approval declined"
                run.outcome = "aborted"
                self._enter(run, "finish", {"cause": run.abort_cause}, session_id)
                self._persist_run(run)
                return run

        prior_failures: list[str] | None = None
        while True:
            run.attempts_used += 1
            attempt = run.attempts_used
            failure: Exception | Verdict | None = None

            try:
                self._enter(run, "generate_code", {"attempt": attempt}, session_id)
                candidate, test_args, prompt = self.generate_code(
                    task, context_summary, attempt, prior_failures
                )
                self._save_artifact(run, f"prompt_attempt{attempt}.txt", prompt)
                self._save_artifact(run, f"script_attempt{attempt}.py", candidate.source_text)
                run.artifacts["generate_code"] = {
                    "attempt": attempt,
                    "entrypoint": candidate.entrypoint_name,
                    "test_args": test_args,
                }

                self._enter(run, "test_code", {"attempt": attempt}, session_id)
                sandbox_result = self.test_code(candidate, test_args)
                self._save_artifact(
                    run,
                    f"sandbox_attempt{attempt}.json",
                    canonical_json(sandbox_result.to_payload()),
                )
                run.artifacts["test_code"] = sandbox_result.to_payload()

                self._enter(run, "evaluate_test_results", {"attempt": attempt}, session_id)
                verdict = self.evaluate_test_results(candidate, sandbox_result)
                self._save_artifact(
                    run, f"verdict_attempt{attempt}.json", canonical_json(verdict.to_payload())
                )
                run.artifacts["evaluate_test_results"] = verdict.to_payload()
                if not verdict.passed:
                    failure = verdict
                else:
                    self._enter(run, "generate_metadata", {"attempt": attempt}, session_id)
                    metadata = self.generate_metadata(candidate)
                    self._save_artifact(
                        run, "metadata.json", canonical_json(metadata.to_payload())
                    )
                    run.artifacts["generate_metadata"] = metadata.to_payload()

                    self._enter(run, "register_tool", {"tool": metadata.function_name}, session_id)
                    tool = self.register_tool(metadata, candidate, session_id)
                    run.artifacts["register_tool"] = {
                        "tool": tool.name,
                        "version": tool.version,
                    }
                    run.registered_tool = tool
                    run.outcome = "registered"
                    self._enter(run, "finish", {"outcome": "registered"}, session_id)
                    self._persist_run(run)
                    return run
            except SandboxUnavailable as exc:
                failure = exc
            except (EmptyGeneration, LlmFailure, MetadataMismatch, KubepilotError) as exc:
                failure = exc

            assert failure is not None
            reasons = (
                failure.failure_reasons
                if isinstance(failure, Verdict)
                else [f"{type(failure).__name__}: {failure}"]
            )
            decision = self.handle_failure(run, failure)  # reads the failing stage
            self._enter(run, "handle_failure", {"attempt": attempt, "reasons": reasons}, session_id)
            run.artifacts.setdefault("handle_failure", []).append(
                {"attempt": attempt, "reasons": reasons, "decision": decision}
            )
            if decision == "retry":
                prior_failures = reasons
                continue
            run.outcome = "aborted"
            run.abort_cause = "; ".join(reasons)
            self._enter(run, "finish", {"outcome": "aborted", "cause": run.abort_cause}, session_id)
            self._persist_run(run)
            return run

    # -- plumbing ------------------------------------------------------------------------

    def _enter(self, run: PipelineRun, stage: str, detail: dict[str, Any], session_id: str) -> None:
        if run.stages_visited:
            previous = run.stages_visited[-1]
            if stage not in STAGE_GRAPH[previous]:
                raise AssertionError(f"illegal stage transition {previous} -> {stage}")
        run.stage = stage
        run.stages_visited.append(stage)
        if self.audit is not None:
            self.audit.append(
                session_id=session_id,
                actor="agent:CodeGenerator",
                action="codegen_stage",
                target=stage,
                payload={"run_id": run.run_id, **detail},
                outcome="entered",
            )
        if self.stage_listener is not None:
            self.stage_listener(stage, run)

    def _save_artifact(self, run: PipelineRun, filename: str, content: str) -> None:
        if self.artifacts_dir is None:
            return
        run_dir = self.artifacts_dir / run.run_id
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / filename).write_text(content)

    def _persist_run(self, run: PipelineRun) -> None:
        summary = {
            "run_id": run.run_id,
            "outcome": run.outcome,
            "attempts_used": run.attempts_used,
            "stages_visited": run.stages_visited,
            "abort_cause": run.abort_cause,
            "registered_tool": run.registered_tool.name if run.registered_tool else None,
        }
        self._save_artifact(run, "run.json", canonical_json(summary))
