"""In-memory cluster model: the deterministic backend and test oracle.

Every record is a plain dataclass keyed the way the live API keys it
(namespaced kinds by (namespace, name), cluster-scoped by name). The model
enforces referential integrity on validation; the fake backend enforces it
on every mutation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum


class VerbCategory(str, Enum):
    """The seven operation categories the system covers."""

    READ = "read"
    WRITE_MODIFY = "write_modify"
    DELETE = "delete"
    EXECUTE_PROXY = "execute_proxy"
    PERMISSION_AUTH = "permission_auth"
    SCALE_LIFECYCLE = "scale_lifecycle"
    CUSTOM_ADVANCED = "custom_advanced"

    @classmethod
    def parse(cls, value: str) -> "VerbCategory":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(f"unknown verb category {value!r}") from None


ALL_CATEGORIES = frozenset(VerbCategory)

POD_PHASES = ("Running", "Pending", "Failed", "CrashLoopBackOff", "Succeeded")


@dataclass
class ResourceRef:
    kind: str
    namespace: str | None = None
    name: str | None = None
    selector: dict[str, str] | None = None

    def __post_init__(self) -> None:
        if self.name is not None and self.selector is not None:
            raise ValueError("name and selector are mutually exclusive")


@dataclass
class Pod:
    namespace: str
    name: str
    phase: str = "Running"
    containers: list[str] = field(default_factory=lambda: ["main"])
    log_text: str = ""
    restart_count: int = 0
    owner_deployment: str | None = None
    node: str | None = None
    labels: dict[str, str] = field(default_factory=dict)


@dataclass
class Deployment:
    namespace: str
    name: str
    replicas: int = 1
    ready_replicas: int = 0
    strategy: str = "RollingUpdate"
    labels: dict[str, str] = field(default_factory=dict)


@dataclass
class Service:
    namespace: str
    name: str
    type: str = "ClusterIP"
    ports: list[int] = field(default_factory=list)
    external_ip: str | None = None
    labels: dict[str, str] = field(default_factory=dict)


@dataclass
class KeyValueResource:
    """configmap or secret payload."""

    namespace: str
    name: str
    data: dict[str, str] = field(default_factory=dict)


@dataclass
class RbacRule:
    categories: list[VerbCategory]
    resource_kinds: list[str] = field(default_factory=lambda: ["*"])

    def grants(self, category: VerbCategory, kind: str) -> bool:
        if category not in self.categories:
            return False
        return "*" in self.resource_kinds or kind in self.resource_kinds


@dataclass
class Role:
    namespace: str
    name: str
    rules: list[RbacRule] = field(default_factory=list)


@dataclass
class RoleBinding:
    namespace: str
    name: str
    role_name: str
    subjects: list[str] = field(default_factory=list)


@dataclass
class ServiceAccount:
    namespace: str
    name: str


@dataclass
class Event:
    namespace: str
    reason: str
    message: str
    involved: str
    timestamp: float = 0.0
    uid: int = 0


@dataclass
class PodMetrics:
    cpu_millicores: int = 0
    memory_mib: int = 0
    net_rx_bytes: int = 0
    net_tx_bytes: int = 0


@dataclass
class Node:
    name: str
    schedulable: bool = True
    capacity: dict[str, str] = field(default_factory=dict)


@dataclass
class Job:
    namespace: str
    name: str
    status: str = "Active"


@dataclass
class ExecResult:
    exit_code: int
    stdout: str = ""
    stderr: str = ""


NamespacedKey = tuple[str, str]
MetricsKey = tuple[str, str, str]


@dataclass
class ClusterModel:
    namespaces: set[str] = field(default_factory=set)
    pods: dict[NamespacedKey, Pod] = field(default_factory=dict)
    deployments: dict[NamespacedKey, Deployment] = field(default_factory=dict)
    services: dict[NamespacedKey, Service] = field(default_factory=dict)
    configmaps: dict[NamespacedKey, KeyValueResource] = field(default_factory=dict)
    secrets: dict[NamespacedKey, KeyValueResource] = field(default_factory=dict)
    roles: dict[NamespacedKey, Role] = field(default_factory=dict)
    rolebindings: dict[NamespacedKey, RoleBinding] = field(default_factory=dict)
    serviceaccounts: dict[NamespacedKey, ServiceAccount] = field(default_factory=dict)
    jobs: dict[NamespacedKey, Job] = field(default_factory=dict)
    events: list[Event] = field(default_factory=list)
    metrics: dict[MetricsKey, PodMetrics] = field(default_factory=dict)
    nodes: dict[str, Node] = field(default_factory=dict)
    # scripted per-fixture table backing exec_in_pod; values may use
    # {pod} / {namespace} placeholders
    exec_commands: dict[str, ExecResult] = field(default_factory=dict)
    _event_counter: int = 0

    def namespaced_tables(self) -> dict[str, dict[NamespacedKey, object]]:
        return {
            "pod": self.pods,
            "deployment": self.deployments,
            "service": self.services,
            "configmap": self.configmaps,
            "secret": self.secrets,
            "role": self.roles,
            "rolebinding": self.rolebindings,
            "serviceaccount": self.serviceaccounts,
            "job": self.jobs,
        }

    def record_event(
        self, namespace: str, reason: str, message: str, involved: str
    ) -> Event:
        self._event_counter += 1
        previous = self.events[-1].timestamp if self.events else 0.0
        event = Event(
            namespace=namespace,
            reason=reason,
            message=message,
            involved=involved,
            timestamp=max(time.time(), previous),
            uid=self._event_counter,
        )
        self.events.append(event)
        return event

    def known_subjects(self) -> set[str]:
        subjects: set[str] = set()
        for binding in self.rolebindings.values():
            subjects.update(binding.subjects)
        subjects.update(sa.name for sa in self.serviceaccounts.values())
        return subjects

    def validate(self) -> None:
        """Raise ValueError on any broken invariant."""
        for table_name, table in self.namespaced_tables().items():
            for (namespace, name), record in table.items():
                if namespace not in self.namespaces:
                    raise ValueError(
                        f"{table_name} {namespace}/{name} references missing namespace"
                    )
                if (namespace, name) != (record.namespace, record.name):  # type: ignore[attr-defined]
                    raise ValueError(f"{table_name} key/record mismatch for {namespace}/{name}")
        for deployment in self.deployments.values():
            if deployment.replicas < 0:
                raise ValueError(f"deployment {deployment.name} has negative replicas")
        for pod in self.pods.values():
            if pod.phase not in POD_PHASES:
                raise ValueError(f"pod {pod.name} has unknown phase {pod.phase!r}")
        previous = 0.0
        for event in self.events:
            if event.timestamp < previous:
                raise ValueError("event timestamps must be non-decreasing")
            previous = event.timestamp
