"""Declarative fixture documents that populate a ClusterModel."""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from ..errors import FixtureNotFound
from .model import (
    ClusterModel,
    Deployment,
    Event,
    ExecResult,
    Job,
    KeyValueResource,
    Node,
    Pod,
    PodMetrics,
    RbacRule,
    Role,
    RoleBinding,
    Service,
    ServiceAccount,
    VerbCategory,
)

_FIXTURE_PACKAGE = "kubepilot.cluster"


def _fixture_text(name: str) -> str:
    candidate = Path(name)
    if candidate.suffix in (".yaml", ".yml") and candidate.exists():
        return candidate.read_text()
    resource = resources.files(_FIXTURE_PACKAGE).joinpath("fixtures", f"{name}.yaml")
    if not resource.is_file():
        raise FixtureNotFound(f"no fixture named {name!r}")
    return resource.read_text()


def seed_fixture(name: str) -> ClusterModel:
    """Build a fresh, validated ClusterModel from a named fixture document."""
    return build_model(yaml.safe_load(_fixture_text(name)) or {})


def build_model(document: dict[str, Any]) -> ClusterModel:
    model = ClusterModel()
    model.namespaces = set(document.get("namespaces", []))
    for item in document.get("pods", []):
        pod = Pod(
            namespace=item["namespace"],
            name=item["name"],
            phase=item.get("phase", "Running"),
            containers=list(item.get("containers", ["main"])),
            log_text=item.get("log_text", ""),
            restart_count=int(item.get("restart_count", 0)),
            owner_deployment=item.get("owner_deployment"),
            node=item.get("node"),
            labels=dict(item.get("labels", {})),
        )
        model.pods[(pod.namespace, pod.name)] = pod
    for item in document.get("deployments", []):
        deployment = Deployment(
            namespace=item["namespace"],
            name=item["name"],
            replicas=int(item.get("replicas", 1)),
            ready_replicas=int(item.get("ready_replicas", item.get("replicas", 1))),
            strategy=item.get("strategy", "RollingUpdate"),
            labels=dict(item.get("labels", {})),
        )
        model.deployments[(deployment.namespace, deployment.name)] = deployment
    for item in document.get("services", []):
        service = Service(
            namespace=item["namespace"],
            name=item["name"],
            type=item.get("type", "ClusterIP"),
            ports=[int(p) for p in item.get("ports", [])],
            external_ip=item.get("external_ip"),
            labels=dict(item.get("labels", {})),
        )
        model.services[(service.namespace, service.name)] = service
    for table, cls in (("configmaps", KeyValueResource), ("secrets", KeyValueResource)):
        target = getattr(model, table)
        for item in document.get(table, []):
            record = cls(
                namespace=item["namespace"],
                name=item["name"],
                data={str(k): str(v) for k, v in item.get("data", {}).items()},
            )
            target[(record.namespace, record.name)] = record
    for item in document.get("roles", []):
        role = Role(
            namespace=item["namespace"],
            name=item["name"],
            rules=[
                RbacRule(
                    categories=[VerbCategory.parse(c) for c in rule.get("categories", [])],
                    resource_kinds=list(rule.get("resource_kinds", ["*"])),
                )
                for rule in item.get("rules", [])
            ],
        )
        model.roles[(role.namespace, role.name)] = role
    for item in document.get("rolebindings", []):
        binding = RoleBinding(
            namespace=item["namespace"],
            name=item["name"],
            role_name=item["role_name"],
            subjects=[str(s) for s in item.get("subjects", [])],
        )
        model.rolebindings[(binding.namespace, binding.name)] = binding
    for item in document.get("serviceaccounts", []):
        account = ServiceAccount(namespace=item["namespace"], name=item["name"])
        model.serviceaccounts[(account.namespace, account.name)] = account
    for item in document.get("jobs", []):
        job = Job(
            namespace=item["namespace"], name=item["name"], status=item.get("status", "Active")
        )
        model.jobs[(job.namespace, job.name)] = job
    for item in document.get("nodes", []):
        node = Node(
            name=item["name"],
            schedulable=bool(item.get("schedulable", True)),
            capacity={str(k): str(v) for k, v in item.get("capacity", {}).items()},
        )
        model.nodes[node.name] = node
    for item in document.get("metrics", []):
        key = (item.get("kind", "pod"), item["namespace"], item["name"])
        model.metrics[key] = PodMetrics(
            cpu_millicores=int(item.get("cpu_millicores", 0)),
            memory_mib=int(item.get("memory_mib", 0)),
            net_rx_bytes=int(item.get("net_rx_bytes", 0)),
            net_tx_bytes=int(item.get("net_tx_bytes", 0)),
        )
    for position, item in enumerate(document.get("events", [])):
        model._event_counter += 1
        model.events.append(
            Event(
                namespace=item["namespace"],
                reason=item.get("reason", ""),
                message=item.get("message", ""),
                involved=item.get("involved", ""),
                timestamp=float(item.get("timestamp", position)),
                uid=model._event_counter,
            )
        )
    for command, result in (document.get("exec_commands") or {}).items():
        model.exec_commands[str(command)] = ExecResult(
            exit_code=int(result.get("exit_code", 0)),
            stdout=result.get("stdout", ""),
            stderr=result.get("stderr", ""),
        )
    model.validate()
    return model
