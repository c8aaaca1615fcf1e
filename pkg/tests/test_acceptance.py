"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the criterion lines.
All criteria run against the scripted mock provider and the demo fixture;
tolerances are stated inline and pinned here.
"""

from __future__ import annotations

import functools
import json
import random
import re
import statistics
import time
import uuid

import pytest

from conftest import (
    ACCEPTED_READ,
    BAD_ENVELOPE_SCRIPT,
    GOOD_TOOL_METADATA,
    GOOD_TOOL_SCRIPT,
    build_harness,
    codegen_reply,
    entry,
)
from kubepilot.checkpoints import (
    FileCheckpointStore,
    InMemoryCheckpointStore,
    restore_state,
    serialize_state,
)
from kubepilot.cluster.model import VerbCategory
from kubepilot.codegen import CandidateScript, parse_entrypoint
from kubepilot.errors import NotFound, SequenceConflict
from kubepilot.querygate import QueryGateway, QueryScope, StructuredQuery
from kubepilot.sandbox import SandboxPolicy, SandboxResult, execute_script
from kubepilot.state import InterruptRequest, WorkflowState
from kubepilot.tooling import DispatchContext, ToolResult
from test_checkpoints import sample_state
from test_engine import JOBS_QUERY, PODS_QUERY, codegen_scenario, pods_scenario


def criterion(number: int, description: str):
    def decorator(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"\nACCEPTANCE {number:02d} FAIL - {description}")
                raise
            print(f"\nACCEPTANCE {number:02d} PASS - {description}")
            return result

        return wrapper

    return decorator


@criterion(1, "end-to-end pod triage scenario on the demo fixture (< 2 s, exact)")
def test_criterion_01_pods_scenario_replay():
    harness = build_harness(pods_scenario())
    started = time.monotonic()
    outcome = harness.engine.run_turn("c1", PODS_QUERY, "admin")
    elapsed = time.monotonic() - started

    assert outcome.kind == "completed"
    assert elapsed < 2.0

    model = harness.backend.snapshot()
    pod_names = {name for (_, name) in model.pods}
    assert len(pod_names) == 6
    for name in pod_names:
        assert name in outcome.text  # response enumerates all six pods

    # the pod listing embedded in the response flags exactly one crashing pod
    listing_line = next(
        line for line in outcome.text.splitlines() if '"pods"' in line
    )
    listing = json.loads(listing_line)
    crashing = [
        p["name"] for p in listing["data"]["pods"] if p["status"]["phase"] == "CrashLoopBackOff"
    ]
    assert crashing == ["worker-1"]

    state = harness.engine.get_state("c1")
    actors = [actor for actor, _ in state.transcript]
    assert actors.index("agent:Configs") < actors.index("agent:Logs")


@criterion(2, "codegen retry ladder: good=1 attempt, bad-bad-good=3, bad*3 aborts (exact)")
def test_criterion_02_codegen_retry_ladder(tmp_path):
    good = build_harness(
        [
            entry("## generate-tool", codegen_reply(GOOD_TOOL_SCRIPT, {"job_names": ["a"]})),
            entry("## extract-metadata", GOOD_TOOL_METADATA),
        ],
        artifacts_dir=tmp_path / "good",
    )
    run = good.codegen.run_pipeline("summarize failed jobs")
    assert (run.outcome, run.attempts_used) == ("registered", 1)

    recovering = build_harness(
        [
            entry("## generate-tool", codegen_reply(BAD_ENVELOPE_SCRIPT)),
            entry("previous attempt failed", codegen_reply(BAD_ENVELOPE_SCRIPT)),
            entry("previous attempt failed", codegen_reply(GOOD_TOOL_SCRIPT, {"job_names": []})),
            entry("## extract-metadata", GOOD_TOOL_METADATA),
        ],
        artifacts_dir=tmp_path / "recovering",
    )
    run = recovering.codegen.run_pipeline("summarize failed jobs")
    assert (run.outcome, run.attempts_used) == ("registered", 3)

    failing = build_harness(
        [
            entry("## generate-tool", codegen_reply(BAD_ENVELOPE_SCRIPT)),
            entry("previous attempt failed", codegen_reply(BAD_ENVELOPE_SCRIPT)),
            entry("previous attempt failed", codegen_reply(BAD_ENVELOPE_SCRIPT)),
        ],
        artifacts_dir=tmp_path / "failing",
    )
    run = failing.codegen.run_pipeline("summarize failed jobs")
    assert (run.outcome, run.attempts_used) == ("aborted", 3)
    assert failing.registry.list_tools(origin="generated") == []  # zero entries
    run_dir = tmp_path / "failing" / run.run_id
    for attempt in (1, 2, 3):  # failure artifacts preserved
        assert (run_dir / f"script_attempt{attempt}.py").exists()
        assert (run_dir / f"verdict_attempt{attempt}.json").exists()


def _structural_view(state: WorkflowState) -> tuple:
    return (
        state.transcript,
        {k: [r.to_payload() for r in v] for k, v in state.agent_outputs.items()},
    )


@criterion(3, "resume equivalence vs uninterrupted run, incl. process restart (exact)")
def test_criterion_03_resume_equivalence(tmp_path):
    interrupted = build_harness(codegen_scenario())
    assert interrupted.engine.run_turn("c3", JOBS_QUERY, "admin").kind == "interrupt"
    assert interrupted.engine.resume("c3", "yes").kind == "completed"

    uninterrupted = build_harness(
        codegen_scenario(), human_input_source=lambda interrupt, state: "yes"
    )
    assert uninterrupted.engine.run_turn("c3", JOBS_QUERY, "admin").kind == "completed"

    assert _structural_view(interrupted.engine.get_state("c3")) == _structural_view(
        uninterrupted.engine.get_state("c3")
    )

    # process-restart variant between interrupt and resume
    checkpoint_path = tmp_path / "cp.log"
    phase_one = build_harness(
        codegen_scenario(), checkpoints=FileCheckpointStore(checkpoint_path)
    )
    assert phase_one.engine.run_turn("c3r", JOBS_QUERY, "admin").kind == "interrupt"
    phase_two = build_harness(
        codegen_scenario(), checkpoints=FileCheckpointStore(checkpoint_path)
    )
    assert phase_two.engine.resume("c3r", "yes").kind == "completed"

    reference = build_harness(
        codegen_scenario(), human_input_source=lambda interrupt, state: "yes"
    )
    reference.engine.run_turn("c3r", JOBS_QUERY, "admin")
    assert _structural_view(phase_two.engine.get_state("c3r")) == _structural_view(
        reference.engine.get_state("c3r")
    )


@criterion(4, "checkpoint store: 1000 randomized ops match a reference log (< 5 s, exact)")
def test_criterion_04_checkpoint_store(tmp_path):
    started = time.monotonic()
    store = FileCheckpointStore(tmp_path / "cp.log")
    reference: dict[str, list[int]] = {}
    rng = random.Random(42)
    sessions = [f"sess-{i}" for i in range(10)]
    for _ in range(1000):
        session = rng.choice(sessions)
        op = rng.choice(["save", "save", "load", "list"])  # save-heavy mix
        if op == "save":
            next_seq = (reference.get(session) or [-1])[-1] + 1
            store.save_checkpoint(session, next_seq, "node", "node_boundary", sample_state())
            reference.setdefault(session, []).append(next_seq)
            if rng.random() < 0.1:  # stale seq must conflict
                with pytest.raises(SequenceConflict):
                    store.save_checkpoint(
                        session, next_seq, "node", "node_boundary", sample_state()
                    )
        elif op == "load":
            if reference.get(session):
                assert store.load_latest(session).seq == reference[session][-1]
            else:
                with pytest.raises(NotFound):
                    store.load_latest(session)
        else:
            assert [c.seq for c in store.list_checkpoints(session)] == reference.get(
                session, []
            )
    # roundtrip identity across every status and interrupt kind
    for status, kind in (
        ("running", None),
        ("completed", None),
        ("failed", None),
        ("awaiting_human", "clarification"),
        ("awaiting_human", "approval"),
    ):
        state = sample_state(status, kind)
        session = f"rt-{status}-{kind}"
        store.save_checkpoint(session, 0, "node", "node_boundary", state)
        assert serialize_state(restore_state(store.load_latest(session))) == serialize_state(
            state
        )
    assert time.monotonic() - started < 5.0


@criterion(5, "sandbox containment: timeout +500 ms, fs escape, 2 MiB output cap (exact)")
def test_criterion_05_sandbox_containment(tmp_path):
    timeout_policy = SandboxPolicy(wall_timeout_ms=100)
    result = execute_script("while True:\n    pass\n", {}, timeout_policy)
    assert result.violations == ["timeout"]
    assert result.duration_ms <= 100 + 500

    protected = tmp_path / "protected"
    protected.mkdir()
    (protected / "keep.txt").write_text("original")
    target = protected / f"escape-{uuid.uuid4().hex}.txt"
    before = sorted(
        (p.relative_to(protected), p.read_bytes()) for p in protected.rglob("*") if p.is_file()
    )
    escape = f'open({str(target)!r}, "w").write("escaped")\n'
    result = execute_script(escape, {}, SandboxPolicy())
    after = sorted(
        (p.relative_to(protected), p.read_bytes()) for p in protected.rglob("*") if p.is_file()
    )
    assert "fs_escape" in result.violations
    assert before == after  # outside tree byte-identical

    cap = 1_048_576
    flood = 'import sys\nsys.stdout.write("x" * (2 * 1024 * 1024))\n'
    result = execute_script(flood, {}, SandboxPolicy(max_output_bytes=cap))
    assert "output_cap" in result.violations
    assert len(result.stdout.encode()) == cap


@criterion(6, "evaluate-stage schema gate: each defect yields its single failure reason (exact)")
def test_criterion_06_evaluate_gate():
    harness = build_harness([], semantic_mode="off")
    evaluate = harness.codegen.evaluate_test_results

    def candidate(script: str = GOOD_TOOL_SCRIPT) -> CandidateScript:
        return CandidateScript(
            source_text=script,
            task_description="summarize failed jobs",
            attempt=1,
            entrypoint_name=parse_entrypoint(script),
        )

    def output(stdout: str) -> SandboxResult:
        return SandboxResult(exit_ok=True, stdout=stdout, stderr="", duration_ms=3)

    assert evaluate(candidate(), output('{"status": "success", "data": []}')).passed

    verdict = evaluate(candidate(), output("oops not structured"))
    assert verdict.failure_reasons == ["not_parseable_output"]

    verdict = evaluate(candidate(), output('{"status": "success"}'))
    assert verdict.failure_reasons == ["schema_mismatch"]

    unmarked = (
        "def summarize_job_failures(p):\n"
        "    return {'status': 'success', 'data': []}\n"
        "import json\nprint(json.dumps(summarize_job_failures({})))\n"
    )
    verdict = evaluate(candidate(unmarked), output('{"status": "success", "data": []}'))
    assert verdict.failure_reasons == ["missing_markers"]

    tainted = GOOD_TOOL_SCRIPT.replace(
        'names = payload.get("job_names", [])',
        'names = payload.get("job_names", [])  # subprocess fallback',
    )
    verdict = evaluate(candidate(tainted), output('{"status": "success", "data": []}'))
    assert verdict.failure_reasons == ["policy_violation"]


@criterion(7, "verb-surface conformance: one passing dispatch per category vs model oracle (exact)")
def test_criterion_07_verb_surface():
    harness = build_harness([])
    registry, backend = harness.registry, harness.backend
    ctx = DispatchContext(session_id="c7", step=1)

    # Read
    result = registry.dispatch(registry.tool("list_pods"), {}, ctx)
    assert result.status == "success"
    assert {p["name"] for p in result.data["pods"]} == {
        name for (_, name) in backend.snapshot().pods
    }

    # Write / Modify
    before = dict(backend.snapshot().configmaps[("demo", "web-config")].data)
    result = registry.dispatch(
        registry.tool("patch_configmap"),
        {"namespace": "demo", "name": "web-config", "key": "MODE", "value": "canary"},
        ctx,
    )
    assert result.status == "success"
    expected = dict(before)
    expected["MODE"] = "canary"
    assert backend.snapshot().configmaps[("demo", "web-config")].data == expected

    # Delete
    assert ("monitoring", "collector-1") in backend.snapshot().pods
    result = registry.dispatch(
        registry.tool("delete_pod"), {"namespace": "monitoring", "pod": "collector-1"}, ctx
    )
    assert result.status == "success" and result.data["deleted"] == 1
    assert ("monitoring", "collector-1") not in backend.snapshot().pods

    # Execute / Proxy
    result = registry.dispatch(
        registry.tool("exec_in_pod"),
        {"namespace": "demo", "pod": "web-1", "command": "cat /etc/hostname"},
        ctx,
    )
    assert result.status == "success"
    assert result.data == {"exit_code": 0, "stdout": "web-1", "stderr": ""}

    # Permission & Auth
    from test_cluster import rbac_oracle

    result = registry.dispatch(
        registry.tool("access_review"),
        {"subject": "viewer", "category": "read", "kind": "pod", "namespace": "demo"},
        ctx,
    )
    assert result.status == "success"
    assert result.data["allowed"] == rbac_oracle(
        backend.snapshot(), "viewer", VerbCategory.READ, "pod", "demo"
    )

    # Scale / Lifecycle
    result = registry.dispatch(
        registry.tool("scale_deployment"),
        {"namespace": "demo", "name": "web", "replicas": 4},
        ctx,
    )
    assert result.status == "success"
    owned = [
        1
        for (ns, _), p in backend.snapshot().pods.items()
        if ns == "demo" and p.owner_deployment == "web"
    ]
    assert len(owned) == 4

    # Custom / Advanced
    manifest = (
        "kind: configmap\nnamespace: demo\nname: fresh-config\nspec:\n  data: {A: '1'}\n"
        "---\n"
        "kind: deployment\nnamespace: demo\nname: web\nspec:\n  replicas: 2\n"
    )
    result = registry.dispatch(registry.tool("apply_manifest"), {"manifest": manifest}, ctx)
    assert result.status == "success"
    assert [o["outcome"] for o in result.data["outcomes"]] == ["created", "updated"]
    assert ("demo", "fresh-config") in backend.snapshot().configmaps


@criterion(8, "RBAC gate: 21-case (role x category) matrix matches the role table (exact)")
def test_criterion_08_rbac_gate():
    cases = 0
    for role_name in ("viewer", "operator", "admin"):
        for category in VerbCategory:
            harness = build_harness(
                [
                    entry(
                        "## classify-query",
                        {
                            "supported": True,
                            "category": category.value,
                            "namespaces": ["demo"],
                            "resource_kinds": ["pod"],
                        },
                    )
                ]
            )
            role = harness.roles.get(role_name)
            query = QueryGateway(harness.llm).validate_query(
                f"perform a {category.value} operation on demo", role
            )
            if category in role.allowed_categories:
                assert query.status == "accepted", (role_name, category)
            else:
                assert query.status == "rejected", (role_name, category)
                assert query.rejection_reason == "permission"
            cases += 1
    assert cases == 21

    # the read-only-cannot-create-secrets case, end to end
    harness = build_harness(
        [
            entry(
                "## classify-query",
                {"supported": True, "category": "write_modify", "resource_kinds": ["secret"]},
            )
        ]
    )
    outcome = harness.engine.run_turn("c8", "create a secret in ns demo", "viewer")
    assert outcome.rejection_reason == "permission"


@criterion(9, "registry idempotency and durability across restart (exact)")
def test_criterion_09_registry_idempotency_durability(tmp_path):
    storage = tmp_path / "tools"
    first = build_harness([], registry_dir=storage)
    kwargs = dict(
        name="summarize_job_failures",
        description="Counts and echoes failed job names.",
        input_schema=[],
        script_text=GOOD_TOOL_SCRIPT,
    )
    spec_a = first.registry.register_generated_tool(**kwargs)
    spec_b = first.registry.register_generated_tool(**kwargs)
    assert spec_a is spec_b
    assert len(first.registry.list_tools(origin="generated")) == 1
    output_before = first.registry.dispatch(spec_a, {}).data

    second = build_harness([], registry_dir=storage)  # simulated process restart
    reloaded = second.registry.tool("summarize_job_failures")
    assert reloaded.origin == "generated" and reloaded.version == 1
    assert second.registry.dispatch(reloaded, {}).data == output_before


@criterion(10, "audit completeness for the triage scenario; log byte-stable (exact)")
def test_criterion_10_audit_completeness(tmp_path):
    audit_path = tmp_path / "audit.log"
    harness = build_harness(pods_scenario(), audit_path=audit_path)
    harness.engine.run_turn("c10", PODS_QUERY, "admin")

    records = harness.audit.query(session_id="c10")
    by_action: dict[str, int] = {}
    for record in records:
        by_action[record.action] = by_action.get(record.action, 0) + 1
    assert by_action.get("query_received", 0) >= 1
    assert by_action.get("routing_decision", 0) >= 2
    assert by_action.get("tool_dispatched", 0) >= 2
    assert by_action.get("tool_result", 0) >= 1

    first = audit_path.read_bytes()
    for _ in range(3):
        assert audit_path.read_bytes() == first


@criterion(11, "supervisor_route with mock provider: median < 50 ms over 100 calls")
def test_criterion_11_mock_path_latency():
    harness = build_harness(
        [
            {
                "match": "## supervisor-route",
                "response": '<<<\n{"action": "finish"}\n>>>',
                "reusable": True,
            }
        ],
        cache_enabled=False,  # measure the full uncached path
    )
    state = WorkflowState(session_id="bench")
    state.query = StructuredQuery(
        raw_text=PODS_QUERY,
        role_name="admin",
        status="accepted",
        intent_category=VerbCategory.READ,
        scope=QueryScope(),
    )
    state.status = "running"
    state.transcript = [("user", PODS_QUERY), ("agent:Configs", "listing done")]

    durations = []
    for _ in range(100):
        started = time.perf_counter()
        decision = harness.engine.supervisor_route(state)
        durations.append((time.perf_counter() - started) * 1000)
        assert decision.action == "finish"
    assert statistics.median(durations) < 50.0


def test_interrupt_request_shape_is_stable():
    """Criterion 3/12 support: the wire-visible interrupt is fully typed."""
    request = InterruptRequest(kind="approval", prompt="Approve?", originating_step=3)
    assert request.to_payload() == {
        "kind": "approval",
        "prompt": "Approve?",
        "originating_step": 3,
    }


def test_tool_result_envelope_contract():
    """Supports criteria 2/6: the envelope shape is exactly status+data."""
    result = ToolResult(status="success", data=[1, 2])
    assert result.envelope() == {"status": "success", "data": [1, 2]}
    assert re.fullmatch(
        r'\{"data":.*,"status":"success"\}',
        json.dumps(result.envelope(), sort_keys=True, separators=(",", ":")),
    )
