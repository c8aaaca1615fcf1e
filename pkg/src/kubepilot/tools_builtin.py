"""Builtin tool handlers and the ten-agent descriptor table.

Handlers receive a ToolEnv (cluster backend + audit log) and validated
arguments, and return the ``data`` half of the result envelope. Cluster
errors propagate; the registry converts them into error results.
Operations the fake backend cannot honestly model (port-forward, attach,
vulnerability scans, certificate approval, pod binding, finalizers) are
stubs returning a structured not-supported payload.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import yaml

from .audit import AuditLog
from .cluster.model import ResourceRef, VerbCategory
from .errors import NotFound
from .tooling import AgentDescriptor, FieldSpec, ToolSpec


@dataclass
class ToolEnv:
    backend: Any
    audit: AuditLog | None = None


Handler = Callable[[ToolEnv, dict[str, Any]], Any]


def _namespace_arg(args: dict[str, Any]) -> str | None:
    value = args.get("namespace")
    return None if value in (None, "", "ALL") else str(value)


# -- Logs ---------------------------------------------------------------------

def get_pod_logs(env: ToolEnv, args: dict[str, Any]) -> Any:
    logs = env.backend.get_logs(args["namespace"], args["pod"], tail=args.get("tail"))
    return {"namespace": args["namespace"], "pod": args["pod"], "logs": logs}


def watch_events(env: ToolEnv, args: dict[str, Any]) -> Any:
    events, cursor = env.backend.watch_events(
        namespace=_namespace_arg(args),
        max_items=args.get("max_items", 50),
        max_wait_ms=args.get("max_wait_ms", 100),
        cursor=args.get("cursor", 0),
    )
    return {"events": events, "cursor": cursor}


def list_namespace_events(env: ToolEnv, args: dict[str, Any]) -> Any:
    events = env.backend.read(ResourceRef(kind="event", namespace=args["namespace"]))
    return {"namespace": args["namespace"], "events": events}


# -- Configs ------------------------------------------------------------------

def list_pods(env: ToolEnv, args: dict[str, Any]) -> Any:
    pods = env.backend.read(ResourceRef(kind="pod", namespace=_namespace_arg(args)))
    return {"pods": pods}


def list_deployments(env: ToolEnv, args: dict[str, Any]) -> Any:
    deployments = env.backend.read(
        ResourceRef(kind="deployment", namespace=_namespace_arg(args))
    )
    return {"deployments": deployments}


def get_service_config(env: ToolEnv, args: dict[str, Any]) -> Any:
    documents = env.backend.read(
        ResourceRef(kind="service", namespace=args["namespace"], name=args["service"])
    )
    if not documents:
        raise NotFound(f"service {args['namespace']}/{args['service']} not found")
    return documents[0]


def validate_configmap(env: ToolEnv, args: dict[str, Any]) -> Any:
    documents = env.backend.read(
        ResourceRef(kind="configmap", namespace=args["namespace"], name=args["name"])
    )
    if not documents:
        raise NotFound(f"configmap {args['namespace']}/{args['name']} not found")
    data = documents[0]["spec"].get("data", {})
    issues = []
    if not data:
        issues.append("configmap has no data keys")
    issues.extend(
        f"key {key!r} contains whitespace" for key in data if any(c.isspace() for c in key)
    )
    return {"name": args["name"], "valid": not issues, "issues": issues, "keys": sorted(data)}


def patch_configmap(env: ToolEnv, args: dict[str, Any]) -> Any:
    ref = ResourceRef(kind="configmap", namespace=args["namespace"], name=args["name"])
    manifest = {"spec": {"data": {args["key"]: args["value"]}}}
    return env.backend.write(ref, manifest, "patch")


# -- RBAC ---------------------------------------------------------------------

def list_roles(env: ToolEnv, args: dict[str, Any]) -> Any:
    roles = env.backend.read(ResourceRef(kind="role", namespace=_namespace_arg(args)))
    return {"roles": roles}


def check_role_binding(env: ToolEnv, args: dict[str, Any]) -> Any:
    documents = env.backend.read(
        ResourceRef(kind="rolebinding", namespace=args["namespace"], name=args["name"])
    )
    if not documents:
        raise NotFound(f"rolebinding {args['namespace']}/{args['name']} not found")
    binding = documents[0]
    role_name = binding["spec"]["role_name"]
    role_documents = env.backend.read(
        ResourceRef(kind="role", namespace=args["namespace"], name=role_name)
    )
    return {
        "binding": binding,
        "role_exists": bool(role_documents),
        "role": role_documents[0] if role_documents else None,
    }


def inspect_service_account(env: ToolEnv, args: dict[str, Any]) -> Any:
    documents = env.backend.read(
        ResourceRef(kind="serviceaccount", namespace=args["namespace"], name=args["name"])
    )
    if not documents:
        raise NotFound(f"serviceaccount {args['namespace']}/{args['name']} not found")
    bindings = env.backend.read(ResourceRef(kind="rolebinding", namespace=args["namespace"]))
    bound = [b for b in bindings if args["name"] in b["spec"].get("subjects", [])]
    return {"serviceaccount": documents[0], "bindings": bound}


def access_review(env: ToolEnv, args: dict[str, Any]) -> Any:
    category = VerbCategory.parse(args["category"])
    ref = ResourceRef(kind=args.get("kind", "pod"), namespace=_namespace_arg(args))
    verdict = env.backend.access_review(args["subject"], category, ref)
    return {"subject": args["subject"], "category": category.value, **verdict}


# -- Metrics ------------------------------------------------------------------

def get_cpu_usage(env: ToolEnv, args: dict[str, Any]) -> Any:
    samples = env.backend.get_metrics("pod", _namespace_arg(args), args.get("pod"))
    return {"samples": samples}


def get_node_metrics(env: ToolEnv, args: dict[str, Any]) -> Any:
    nodes = env.backend.read(ResourceRef(kind="node", name=args.get("node")))
    pods = env.backend.read(ResourceRef(kind="pod"))
    samples = env.backend.get_metrics("pod")
    by_name = {(s["namespace"], s["name"]): s for s in samples}
    rows = []
    for node in nodes:
        hosted = [p for p in pods if p["spec"].get("node") == node["name"]]
        cpu = sum(
            by_name.get((p["namespace"], p["name"]), {}).get("cpu_millicores", 0)
            for p in hosted
        )
        memory = sum(
            by_name.get((p["namespace"], p["name"]), {}).get("memory_mib", 0) for p in hosted
        )
        rows.append(
            {
                "node": node["name"],
                "schedulable": node["status"]["schedulable"],
                "capacity": node["spec"]["capacity"],
                "pods": len(hosted),
                "cpu_millicores": cpu,
                "memory_mib": memory,
            }
        )
    return {"nodes": rows}


def pod_network_io(env: ToolEnv, args: dict[str, Any]) -> Any:
    samples = env.backend.get_metrics("pod", args["namespace"], args["pod"])
    if not samples:
        raise NotFound(f"no metrics for pod {args['namespace']}/{args['pod']}")
    sample = samples[0]
    return {
        "namespace": args["namespace"],
        "pod": args["pod"],
        "net_rx_bytes": sample["net_rx_bytes"],
        "net_tx_bytes": sample["net_tx_bytes"],
    }


# -- Security ------------------------------------------------------------------

def analyze_audit_logs(env: ToolEnv, args: dict[str, Any]) -> Any:
    if env.audit is None:
        return {"total": 0, "by_action": {}, "note": "no audit log attached"}
    records = env.audit.query(
        session_id=args.get("session_id"), action=args.get("action")
    )
    by_action: dict[str, int] = {}
    for record in records:
        by_action[record.action] = by_action.get(record.action, 0) + 1
    return {"total": len(records), "by_action": by_action}


# -- Lifecycle -------------------------------------------------------------------

def scale_deployment(env: ToolEnv, args: dict[str, Any]) -> Any:
    ref = ResourceRef(kind="deployment", namespace=args["namespace"], name=args["name"])
    return env.backend.lifecycle("scale", ref, {"replicas": args["replicas"]})


def cordon_node(env: ToolEnv, args: dict[str, Any]) -> Any:
    return env.backend.lifecycle("cordon", ResourceRef(kind="node", name=args["node"]))


def restart_pod(env: ToolEnv, args: dict[str, Any]) -> Any:
    ref = ResourceRef(kind="pod", namespace=args["namespace"], name=args["pod"])
    return env.backend.lifecycle("restart", ref)


def evict_pod(env: ToolEnv, args: dict[str, Any]) -> Any:
    ref = ResourceRef(kind="pod", namespace=args["namespace"], name=args["pod"])
    return env.backend.lifecycle("evict", ref)


# -- Execution --------------------------------------------------------------------

def exec_in_pod(env: ToolEnv, args: dict[str, Any]) -> Any:
    return env.backend.exec_in_pod(args["namespace"], args["pod"], args["command"].split())


# -- Deletion ---------------------------------------------------------------------

def delete_pod(env: ToolEnv, args: dict[str, Any]) -> Any:
    ref = ResourceRef(kind="pod", namespace=args["namespace"], name=args["pod"])
    return {"deleted": env.backend.delete(ref)}


def cleanup_jobs(env: ToolEnv, args: dict[str, Any]) -> Any:
    finished = (args["status"],) if args.get("status") else ("Succeeded", "Failed")
    jobs = env.backend.read(ResourceRef(kind="job", namespace=args["namespace"]))
    removed = []
    for job in jobs:
        if job["status"]["status"] in finished:
            env.backend.delete(
                ResourceRef(kind="job", namespace=args["namespace"], name=job["name"])
            )
            removed.append(job["name"])
    return {"deleted": len(removed), "jobs": removed}


def delete_namespace_resources(env: ToolEnv, args: dict[str, Any]) -> Any:
    kinds = [args["kind"]] if args.get("kind") else ["pod", "deployment", "service", "job"]
    counts = {}
    for kind in kinds:
        counts[kind] = env.backend.delete(
            ResourceRef(kind=kind, namespace=args["namespace"]), collection=True
        )
    return {"deleted": counts}


# -- AdvancedOps ----------------------------------------------------------------------

def apply_manifest(env: ToolEnv, args: dict[str, Any]) -> Any:
    manifests = [doc for doc in yaml.safe_load_all(args["manifest"]) if doc]
    return {"outcomes": env.backend.apply_manifest(manifests)}


# -- stubs ------------------------------------------------------------------------------

def _not_supported(operation: str) -> Handler:
    def handler(env: ToolEnv, args: dict[str, Any]) -> Any:
        return {
            "supported": False,
            "operation": operation,
            "detail": f"{operation} is not available on the {env.backend.backend_id} backend",
        }

    return handler


_NS = FieldSpec("namespace", "text")
_NS_OPT = FieldSpec("namespace", "text", required=False)
_POD = FieldSpec("pod", "text")


def _tool(
    name: str,
    description: str,
    schema: list[FieldSpec],
    owner: str,
    category: VerbCategory,
) -> ToolSpec:
    return ToolSpec(
        name=name,
        description=description,
        input_schema=schema,
        owner_agent=owner,
        category=category,
        origin="builtin",
        artifact=name,
    )


BUILTIN_TOOLS: list[ToolSpec] = [
    # Logs
    _tool("get_pod_logs", "Fetch the log text of one pod, optionally only the last N lines.",
          [_NS, _POD, FieldSpec("tail", "integer", required=False)], "Logs", VerbCategory.READ),
    _tool("watch_events", "Poll for cluster events newer than a cursor, bounded in items and wait time.",
          [_NS_OPT, FieldSpec("max_items", "integer", required=False),
           FieldSpec("max_wait_ms", "integer", required=False),
           FieldSpec("cursor", "integer", required=False)], "Logs", VerbCategory.READ),
    _tool("list_namespace_events", "List all recorded events in a namespace in order.",
          [_NS], "Logs", VerbCategory.READ),
    # Configs
    _tool("list_pods", "List pods with phase and restart counts, in one namespace or all.",
          [_NS_OPT], "Configs", VerbCategory.READ),
    _tool("list_deployments", "List deployments with replica counts, in one namespace or all.",
          [_NS_OPT], "Configs", VerbCategory.READ),
    _tool("get_service_config", "Get the configuration document of one service.",
          [_NS, FieldSpec("service", "text")], "Configs", VerbCategory.READ),
    _tool("validate_configmap", "Check a configmap for empty data and malformed keys.",
          [_NS, FieldSpec("name", "text")], "Configs", VerbCategory.READ),
    _tool("patch_configmap", "Set one key of a configmap, leaving other keys unchanged.",
          [_NS, FieldSpec("name", "text"), FieldSpec("key", "text"), FieldSpec("value", "text")],
          "Configs", VerbCategory.WRITE_MODIFY),
    # RBAC
    _tool("list_roles", "List RBAC roles and their rules.",
          [_NS_OPT], "RBAC", VerbCategory.READ),
    _tool("check_role_binding", "Inspect a rolebinding and verify its role exists.",
          [_NS, FieldSpec("name", "text")], "RBAC", VerbCategory.READ),
    _tool("inspect_service_account", "Show a service account and the rolebindings naming it.",
          [_NS, FieldSpec("name", "text")], "RBAC", VerbCategory.READ),
    _tool("access_review", "Check whether a subject may perform a verb category on a kind.",
          [FieldSpec("subject", "text"), FieldSpec("category", "text"),
           FieldSpec("kind", "text", required=False), _NS_OPT],
          "RBAC", VerbCategory.PERMISSION_AUTH),
    # Metrics
    _tool("get_cpu_usage", "Report CPU and memory samples for pods.",
          [_NS_OPT, FieldSpec("pod", "text", required=False)], "Metrics", VerbCategory.READ),
    _tool("get_node_metrics", "Aggregate pod resource usage per node with capacity.",
          [FieldSpec("node", "text", required=False)], "Metrics", VerbCategory.READ),
    _tool("pod_network_io", "Report network bytes in/out for one pod.",
          [_NS, _POD], "Metrics", VerbCategory.READ),
    # Security
    _tool("analyze_audit_logs", "Summarize audit records, optionally by session or action.",
          [FieldSpec("session_id", "text", required=False),
           FieldSpec("action", "text", required=False)], "Security", VerbCategory.READ),
    _tool("check_psp_violations", "Check pod security policy violations.",
          [_NS_OPT], "Security", VerbCategory.READ),
    _tool("scan_vulnerabilities", "Scan workloads for known vulnerabilities.",
          [_NS_OPT], "Security", VerbCategory.READ),
    # Lifecycle
    _tool("scale_deployment", "Scale a deployment to a replica count and reconcile its pods.",
          [_NS, FieldSpec("name", "text"), FieldSpec("replicas", "integer")],
          "Lifecycle", VerbCategory.SCALE_LIFECYCLE),
    _tool("cordon_node", "Mark a node unschedulable.",
          [FieldSpec("node", "text")], "Lifecycle", VerbCategory.SCALE_LIFECYCLE),
    _tool("restart_pod", "Restart a pod (increments restart count, resets phase).",
          [_NS, _POD], "Lifecycle", VerbCategory.SCALE_LIFECYCLE),
    _tool("evict_pod", "Evict a pod from its node.",
          [_NS, _POD], "Lifecycle", VerbCategory.SCALE_LIFECYCLE),
    # Execution
    _tool("exec_in_pod", "Run a command inside a running pod and capture its output.",
          [_NS, _POD, FieldSpec("command", "text")], "Execution", VerbCategory.EXECUTE_PROXY),
    _tool("port_forward", "Forward a local port to a pod port.",
          [_NS, _POD, FieldSpec("port", "integer")], "Execution", VerbCategory.EXECUTE_PROXY),
    _tool("attach_container", "Attach to a running container's streams.",
          [_NS, _POD], "Execution", VerbCategory.EXECUTE_PROXY),
    # Deletion
    _tool("delete_pod", "Delete one pod.",
          [_NS, _POD], "Deletion", VerbCategory.DELETE),
    _tool("cleanup_jobs", "Delete finished jobs in a namespace (Succeeded/Failed, or one status).",
          [_NS, FieldSpec("status", "text", required=False)], "Deletion", VerbCategory.DELETE),
    _tool("delete_namespace_resources", "Delete all resources of a kind (or common kinds) in a namespace.",
          [_NS, FieldSpec("kind", "text", required=False)], "Deletion", VerbCategory.DELETE),
    # AdvancedOps
    _tool("apply_manifest", "Apply a YAML manifest: create-or-update each resource in order.",
          [FieldSpec("manifest", "text")], "AdvancedOps", VerbCategory.CUSTOM_ADVANCED),
    _tool("bind_pod", "Bind a pod to a node.",
          [_NS, _POD, FieldSpec("node", "text")], "AdvancedOps", VerbCategory.CUSTOM_ADVANCED),
    _tool("approve_certificate", "Approve a certificate signing request.",
          [FieldSpec("name", "text")], "AdvancedOps", VerbCategory.CUSTOM_ADVANCED),
    _tool("finalize_resource", "Remove finalizers from a resource.",
          [FieldSpec("kind", "text"), _NS, FieldSpec("name", "text")],
          "AdvancedOps", VerbCategory.CUSTOM_ADVANCED),
]


HANDLERS: dict[str, Handler] = {
    "get_pod_logs": get_pod_logs,
    "watch_events": watch_events,
    "list_namespace_events": list_namespace_events,
    "list_pods": list_pods,
    "list_deployments": list_deployments,
    "get_service_config": get_service_config,
    "validate_configmap": validate_configmap,
    "patch_configmap": patch_configmap,
    "list_roles": list_roles,
    "check_role_binding": check_role_binding,
    "inspect_service_account": inspect_service_account,
    "access_review": access_review,
    "get_cpu_usage": get_cpu_usage,
    "get_node_metrics": get_node_metrics,
    "pod_network_io": pod_network_io,
    "analyze_audit_logs": analyze_audit_logs,
    "check_psp_violations": _not_supported("check_psp_violations"),
    "scan_vulnerabilities": _not_supported("scan_vulnerabilities"),
    "scale_deployment": scale_deployment,
    "cordon_node": cordon_node,
    "restart_pod": restart_pod,
    "evict_pod": evict_pod,
    "exec_in_pod": exec_in_pod,
    "port_forward": _not_supported("port_forward"),
    "attach_container": _not_supported("attach_container"),
    "delete_pod": delete_pod,
    "cleanup_jobs": cleanup_jobs,
    "delete_namespace_resources": delete_namespace_resources,
    "apply_manifest": apply_manifest,
    "bind_pod": _not_supported("bind_pod"),
    "approve_certificate": _not_supported("approve_certificate"),
    "finalize_resource": _not_supported("finalize_resource"),
}


def _owned(agent: str) -> list[str]:
    return [t.name for t in BUILTIN_TOOLS if t.owner_agent == agent]


TABLE_AGENTS: list[AgentDescriptor] = [
    AgentDescriptor("Logs", "Retrieves and filters logs and events for pods, nodes, and the system.",
                    _owned("Logs"), "You answer log and event questions with the available tools."),
    AgentDescriptor("Configs", "Inspects and manages declarative configurations of workloads and services.",
                    _owned("Configs"), "You inspect and adjust workload configuration."),
    AgentDescriptor("RBAC", "Audits access control policies and role bindings.",
                    _owned("RBAC"), "You audit roles, bindings, and access."),
    AgentDescriptor("Metrics", "Gathers resource and application performance metrics.",
                    _owned("Metrics"), "You report resource usage."),
    AgentDescriptor("Security", "Analyzes cluster security posture and detects violations.",
                    _owned("Security"), "You analyze security posture."),
    AgentDescriptor("Lifecycle", "Executes control actions on workloads and nodes.",
                    _owned("Lifecycle"), "You run lifecycle actions."),
    AgentDescriptor("Execution", "Runs interactive commands inside containers and tunnels.",
                    _owned("Execution"), "You execute in-container commands."),
    AgentDescriptor("Deletion", "Deletes individual or bulk resources.",
                    _owned("Deletion"), "You delete resources carefully."),
    AgentDescriptor("AdvancedOps", "Handles complex operations like binding, server-side apply, or CRD interactions.",
                    _owned("AdvancedOps"), "You perform advanced operations."),
    AgentDescriptor("CodeGenerator", "Synthesizes and registers new tools dynamically when no predefined tool matches.",
                    _owned("CodeGenerator"), "You build new tools on demand."),
]
