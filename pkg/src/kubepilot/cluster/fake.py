"""Deterministic fake cluster backend.

Implements the full operation surface against a ClusterModel: reads, writes
(create/update/patch/replace), deletes with cascade, pod exec against a
scripted command table, RBAC access reviews, lifecycle actions, and
manifest application. Mutations are serialized through one lock; reads
return plain documents built from a consistent view.
"""

from __future__ import annotations

import copy
import threading
import time
from typing import Any

from ..errors import (
    AlreadyExists,
    InvalidParams,
    NotFound,
    PodNotRunning,
    ResourceValidationError,
    UnknownKind,
    UnknownSubject,
)
from .model import (
    ClusterModel,
    Deployment,
    ExecResult,
    Job,
    KeyValueResource,
    Node,
    Pod,
    PodMetrics,
    RbacRule,
    ResourceRef,
    Role,
    RoleBinding,
    Service,
    ServiceAccount,
    VerbCategory,
)

NAMESPACED_KINDS = (
    "pod",
    "deployment",
    "service",
    "configmap",
    "secret",
    "role",
    "rolebinding",
    "serviceaccount",
    "job",
)
CLUSTER_KINDS = ("namespace", "node")
READABLE_KINDS = NAMESPACED_KINDS + CLUSTER_KINDS + ("event",)

LIFECYCLE_ACTIONS = ("scale", "restart", "cordon", "uncordon", "evict", "rollout_status")


def _matches_selector(labels: dict[str, str], selector: dict[str, str] | None) -> bool:
    if not selector:
        return True
    return all(labels.get(key) == value for key, value in selector.items())


class FakeClusterBackend:
    """ClusterModel-backed implementation of the cluster contract."""

    backend_id = "fake"

    def __init__(self, model: ClusterModel | None = None):
        self.model = model if model is not None else ClusterModel()
        self.model.validate()
        self._lock = threading.RLock()

    # -- document rendering -------------------------------------------------

    def _document(self, kind: str, record: Any) -> dict[str, Any]:
        if kind == "pod":
            return {
                "kind": "pod",
                "namespace": record.namespace,
                "name": record.name,
                "spec": {
                    "containers": list(record.containers),
                    "owner_deployment": record.owner_deployment,
                    "node": record.node,
                    "labels": dict(record.labels),
                },
                "status": {"phase": record.phase, "restart_count": record.restart_count},
            }
        if kind == "deployment":
            return {
                "kind": "deployment",
                "namespace": record.namespace,
                "name": record.name,
                "spec": {
                    "replicas": record.replicas,
                    "strategy": record.strategy,
                    "labels": dict(record.labels),
                },
                "status": {"ready_replicas": record.ready_replicas},
            }
        if kind == "service":
            return {
                "kind": "service",
                "namespace": record.namespace,
                "name": record.name,
                "spec": {
                    "type": record.type,
                    "ports": list(record.ports),
                    "labels": dict(record.labels),
                },
                "status": {"external_ip": record.external_ip},
            }
        if kind in ("configmap", "secret"):
            return {
                "kind": kind,
                "namespace": record.namespace,
                "name": record.name,
                "spec": {"data": dict(record.data)},
                "status": {},
            }
        if kind == "role":
            return {
                "kind": "role",
                "namespace": record.namespace,
                "name": record.name,
                "spec": {
                    "rules": [
                        {
                            "categories": [c.value for c in rule.categories],
                            "resource_kinds": list(rule.resource_kinds),
                        }
                        for rule in record.rules
                    ]
                },
                "status": {},
            }
        if kind == "rolebinding":
            return {
                "kind": "rolebinding",
                "namespace": record.namespace,
                "name": record.name,
                "spec": {"role_name": record.role_name, "subjects": list(record.subjects)},
                "status": {},
            }
        if kind == "serviceaccount":
            return {
                "kind": "serviceaccount",
                "namespace": record.namespace,
                "name": record.name,
                "spec": {},
                "status": {},
            }
        if kind == "job":
            return {
                "kind": "job",
                "namespace": record.namespace,
                "name": record.name,
                "spec": {},
                "status": {"status": record.status},
            }
        if kind == "namespace":
            return {"kind": "namespace", "namespace": None, "name": record, "spec": {}, "status": {}}
        if kind == "node":
            return {
                "kind": "node",
                "namespace": None,
                "name": record.name,
                "spec": {"capacity": dict(record.capacity)},
                "status": {"schedulable": record.schedulable},
            }
        if kind == "event":
            return {
                "kind": "event",
                "namespace": record.namespace,
                "name": f"event-{record.uid}",
                "spec": {
                    "reason": record.reason,
                    "message": record.message,
                    "involved": record.involved,
                },
                "status": {"timestamp": record.timestamp},
            }
        raise UnknownKind(f"unsupported kind {kind!r}")

    def _labels_of(self, kind: str, record: Any) -> dict[str, str]:
        return getattr(record, "labels", {}) or {}

    # -- read ----------------------------------------------------------------

    def read(self, ref: ResourceRef) -> list[dict[str, Any]]:
        kind = ref.kind.lower()
        if kind not in READABLE_KINDS:
            raise UnknownKind(f"unsupported kind {ref.kind!r}")
        with self._lock:
            if kind == "namespace":
                names = sorted(self.model.namespaces)
                if ref.name is not None:
                    names = [n for n in names if n == ref.name]
                return [self._document("namespace", n) for n in names]
            if kind == "node":
                nodes = [self.model.nodes[n] for n in sorted(self.model.nodes)]
                if ref.name is not None:
                    nodes = [n for n in nodes if n.name == ref.name]
                return [self._document("node", n) for n in nodes]
            if kind == "event":
                events = [
                    e
                    for e in self.model.events
                    if ref.namespace in (None, "ALL") or e.namespace == ref.namespace
                ]
                return [self._document("event", e) for e in events]

            table = self.model.namespaced_tables()[kind]
            documents = []
            for (namespace, name) in sorted(table):
                record = table[(namespace, name)]
                if ref.namespace not in (None, "ALL") and namespace != ref.namespace:
                    continue
                if ref.name is not None and name != ref.name:
                    continue
                if not _matches_selector(self._labels_of(kind, record), ref.selector):
                    continue
                documents.append(self._document(kind, record))
            return documents

    def get_logs(self, namespace: str, pod: str, tail: int | None = None) -> str:
        with self._lock:
            record = self.model.pods.get((namespace, pod))
            if record is None:
                raise NotFound(f"pod {namespace}/{pod} not found")
            text = record.log_text
        if tail is None:
            return text
        lines = text.splitlines()
        return "\n".join(lines[-tail:]) if tail > 0 else ""

    def watch_events(
        self,
        namespace: str | None = None,
        max_items: int = 100,
        max_wait_ms: int = 100,
        cursor: int = 0,
    ) -> tuple[list[dict[str, Any]], int]:
        """Bounded poll: events with uid > cursor, up to max_items.

        Returns (documents, new_cursor); never blocks past max_wait_ms.
        """
        deadline = time.monotonic() + max_wait_ms / 1000.0
        while True:
            with self._lock:
                fresh = [
                    e
                    for e in self.model.events
                    if e.uid > cursor
                    and (namespace in (None, "ALL") or e.namespace == namespace)
                ]
            if fresh or time.monotonic() >= deadline:
                batch = fresh[:max_items]
                new_cursor = batch[-1].uid if batch else cursor
                return [self._document("event", e) for e in batch], new_cursor
            time.sleep(min(0.005, max(0.0, deadline - time.monotonic())))

    def get_metrics(
        self, kind: str, namespace: str | None = None, name: str | None = None
    ) -> list[dict[str, Any]]:
        with self._lock:
            rows = []
            for (m_kind, m_ns, m_name), sample in sorted(self.model.metrics.items()):
                if m_kind != kind:
                    continue
                if namespace not in (None, "ALL") and m_ns != namespace:
                    continue
                if name is not None and m_name != name:
                    continue
                rows.append(
                    {
                        "kind": m_kind,
                        "namespace": m_ns,
                        "name": m_name,
                        "cpu_millicores": sample.cpu_millicores,
                        "memory_mib": sample.memory_mib,
                        "net_rx_bytes": sample.net_rx_bytes,
                        "net_tx_bytes": sample.net_tx_bytes,
                    }
                )
            return rows

    # -- write ----------------------------------------------------------------

    def write(self, ref: ResourceRef, manifest: dict[str, Any], mode: str) -> dict[str, Any]:
        if mode not in ("create", "update", "patch", "replace"):
            raise ResourceValidationError(f"unknown write mode {mode!r}")
        kind = ref.kind.lower()
        with self._lock:
            if kind == "namespace":
                return self._write_namespace(ref, mode)
            if kind == "node":
                return self._write_node(ref, manifest, mode)
            if kind not in NAMESPACED_KINDS:
                raise UnknownKind(f"unsupported kind {ref.kind!r}")
            if not ref.namespace or not ref.name:
                raise ResourceValidationError("write requires namespace and name")
            if ref.namespace not in self.model.namespaces:
                raise ResourceValidationError(f"namespace {ref.namespace!r} does not exist")

            table = self.model.namespaced_tables()[kind]
            key = (ref.namespace, ref.name)
            existing = table.get(key)
            if mode == "create" and existing is not None:
                raise AlreadyExists(f"{kind} {ref.namespace}/{ref.name} already exists")
            if mode in ("update", "patch", "replace") and existing is None:
                raise NotFound(f"{kind} {ref.namespace}/{ref.name} not found")

            spec = manifest.get("spec", {})
            if not isinstance(spec, dict):
                raise ResourceValidationError("manifest spec must be a mapping")
            if mode == "patch":
                merged = self._spec_of(kind, existing)
                self._deep_merge(merged, spec)
                spec = merged
            record = self._record_from_spec(kind, ref.namespace, ref.name, spec)
            table[key] = record  # type: ignore[assignment]
            if kind == "pod" and mode == "create":
                self.model.metrics.setdefault(("pod", ref.namespace, ref.name), PodMetrics())
            return self._document(kind, record)

    def _write_namespace(self, ref: ResourceRef, mode: str) -> dict[str, Any]:
        if not ref.name:
            raise ResourceValidationError("namespace write requires a name")
        exists = ref.name in self.model.namespaces
        if mode == "create" and exists:
            raise AlreadyExists(f"namespace {ref.name!r} already exists")
        if mode != "create" and not exists:
            raise NotFound(f"namespace {ref.name!r} not found")
        self.model.namespaces.add(ref.name)
        return self._document("namespace", ref.name)

    def _write_node(self, ref: ResourceRef, manifest: dict[str, Any], mode: str) -> dict[str, Any]:
        if not ref.name:
            raise ResourceValidationError("node write requires a name")
        existing = self.model.nodes.get(ref.name)
        if mode == "create" and existing is not None:
            raise AlreadyExists(f"node {ref.name!r} already exists")
        if mode != "create" and existing is None:
            raise NotFound(f"node {ref.name!r} not found")
        spec = manifest.get("spec", {})
        node = Node(
            name=ref.name,
            schedulable=bool(
                manifest.get("status", {}).get(
                    "schedulable", existing.schedulable if existing else True
                )
            ),
            capacity=dict(spec.get("capacity", existing.capacity if existing else {})),
        )
        self.model.nodes[ref.name] = node
        return self._document("node", node)

    def _spec_of(self, kind: str, record: Any) -> dict[str, Any]:
        return copy.deepcopy(self._document(kind, record)["spec"])

    @staticmethod
    def _deep_merge(base: dict[str, Any], overlay: dict[str, Any]) -> None:
        for key, value in overlay.items():
            if isinstance(value, dict) and isinstance(base.get(key), dict):
                FakeClusterBackend._deep_merge(base[key], value)
            else:
                base[key] = value

    def _record_from_spec(self, kind: str, namespace: str, name: str, spec: dict[str, Any]) -> Any:
        try:
            if kind == "pod":
                phase = spec.get("phase", "Running")
                return Pod(
                    namespace=namespace,
                    name=name,
                    phase=phase,
                    containers=list(spec.get("containers", ["main"])),
                    log_text=str(spec.get("log_text", "")),
                    restart_count=int(spec.get("restart_count", 0)),
                    owner_deployment=spec.get("owner_deployment"),
                    node=spec.get("node"),
                    labels=dict(spec.get("labels", {})),
                )
            if kind == "deployment":
                replicas = int(spec.get("replicas", 1))
                if replicas < 0:
                    raise ResourceValidationError("replicas must be >= 0")
                return Deployment(
                    namespace=namespace,
                    name=name,
                    replicas=replicas,
                    ready_replicas=int(spec.get("ready_replicas", replicas)),
                    strategy=str(spec.get("strategy", "RollingUpdate")),
                    labels=dict(spec.get("labels", {})),
                )
            if kind == "service":
                return Service(
                    namespace=namespace,
                    name=name,
                    type=str(spec.get("type", "ClusterIP")),
                    ports=[int(p) for p in spec.get("ports", [])],
                    external_ip=spec.get("external_ip"),
                    labels=dict(spec.get("labels", {})),
                )
            if kind == "configmap":
                return KeyValueResource(
                    namespace=namespace, name=name, data=dict(spec.get("data", {}))
                )
            if kind == "secret":
                return KeyValueResource(
                    namespace=namespace, name=name, data=dict(spec.get("data", {}))
                )
            if kind == "role":
                rules = [
                    RbacRule(
                        categories=[VerbCategory.parse(c) for c in rule.get("categories", [])],
                        resource_kinds=list(rule.get("resource_kinds", ["*"])),
                    )
                    for rule in spec.get("rules", [])
                ]
                return Role(namespace=namespace, name=name, rules=rules)
            if kind == "rolebinding":
                role_name = spec.get("role_name")
                if not role_name:
                    raise ResourceValidationError("rolebinding requires role_name")
                return RoleBinding(
                    namespace=namespace,
                    name=name,
                    role_name=str(role_name),
                    subjects=[str(s) for s in spec.get("subjects", [])],
                )
            if kind == "serviceaccount":
                return ServiceAccount(namespace=namespace, name=name)
            if kind == "job":
                return Job(namespace=namespace, name=name, status=str(spec.get("status", "Active")))
        except (TypeError, ValueError) as exc:
            raise ResourceValidationError(f"invalid {kind} manifest: {exc}") from exc
        raise UnknownKind(f"unsupported kind {kind!r}")

    # -- delete ---------------------------------------------------------------

    def delete(self, ref: ResourceRef, collection: bool = False) -> int:
        kind = ref.kind.lower()
        with self._lock:
            if kind == "namespace":
                return self._delete_namespace(ref, collection)
            if kind == "node":
                if ref.name is None or ref.name not in self.model.nodes:
                    if collection:
                        return 0
                    raise NotFound(f"node {ref.name!r} not found")
                del self.model.nodes[ref.name]
                return 1
            if kind not in NAMESPACED_KINDS:
                raise UnknownKind(f"unsupported kind {ref.kind!r}")
            table = self.model.namespaced_tables()[kind]

            if not collection:
                if not ref.namespace or not ref.name:
                    raise ResourceValidationError("single delete requires namespace and name")
                key = (ref.namespace, ref.name)
                if key not in table:
                    raise NotFound(f"{kind} {ref.namespace}/{ref.name} not found")
                return self._remove(kind, [key])

            keys = [
                key
                for key, record in sorted(table.items())
                if (ref.namespace in (None, "ALL") or key[0] == ref.namespace)
                and (ref.name is None or key[1] == ref.name)
                and _matches_selector(self._labels_of(kind, record), ref.selector)
            ]
            return self._remove(kind, keys)

    def _remove(self, kind: str, keys: list[tuple[str, str]]) -> int:
        table = self.model.namespaced_tables()[kind]
        count = 0
        for key in keys:
            if key not in table:
                continue
            del table[key]
            count += 1
            namespace, name = key
            if kind == "pod":
                self.model.metrics.pop(("pod", namespace, name), None)
            if kind == "deployment":
                owned = [
                    pod_key
                    for pod_key, pod in list(self.model.pods.items())
                    if pod_key[0] == namespace and pod.owner_deployment == name
                ]
                count += self._remove("pod", owned)
        return count

    def _delete_namespace(self, ref: ResourceRef, collection: bool) -> int:
        if not ref.name:
            raise ResourceValidationError("namespace delete requires a name")
        if ref.name not in self.model.namespaces:
            if collection:
                return 0
            raise NotFound(f"namespace {ref.name!r} not found")
        count = 1
        for kind, table in self.model.namespaced_tables().items():
            keys = [key for key in list(table) if key[0] == ref.name]
            for key in keys:
                if key in table:  # cascade may already have removed owned pods
                    del table[key]
                    count += 1
        self.model.metrics = {
            key: value for key, value in self.model.metrics.items() if key[1] != ref.name
        }
        self.model.events = [e for e in self.model.events if e.namespace != ref.name]
        self.model.namespaces.discard(ref.name)
        return count

    # -- exec -------------------------------------------------------------------

    def exec_in_pod(self, namespace: str, pod: str, command: list[str]) -> dict[str, Any]:
        with self._lock:
            record = self.model.pods.get((namespace, pod))
            if record is None:
                raise NotFound(f"pod {namespace}/{pod} not found")
            if record.phase != "Running":
                raise PodNotRunning(f"pod {namespace}/{pod} is {record.phase}")
            joined = " ".join(command)
            scripted = self.model.exec_commands.get(joined)
            if scripted is None:
                return {"exit_code": 127, "stdout": "", "stderr": f"command not found: {joined}"}
            substitutions = {"pod": pod, "namespace": namespace}
            return {
                "exit_code": scripted.exit_code,
                "stdout": scripted.stdout.format(**substitutions),
                "stderr": scripted.stderr.format(**substitutions),
            }

    # -- access review ------------------------------------------------------------

    def access_review(
        self, subject: str, category: VerbCategory, ref: ResourceRef
    ) -> dict[str, Any]:
        with self._lock:
            if subject not in self.model.known_subjects():
                raise UnknownSubject(f"subject {subject!r} has no RBAC records")
            kind = ref.kind.lower()
            for (ns, _), binding in sorted(self.model.rolebindings.items()):
                if subject not in binding.subjects:
                    continue
                if ref.namespace not in (None, "ALL") and ns != ref.namespace:
                    continue
                role = self.model.roles.get((ns, binding.role_name))
                if role is None:
                    continue
                for rule in role.rules:
                    if rule.grants(category, kind):
                        return {
                            "allowed": True,
                            "reason": f"rolebinding {ns}/{binding.name} grants "
                            f"{category.value} on {kind}",
                        }
            scope = f" in namespace {ref.namespace}" if ref.namespace not in (None, "ALL") else ""
            return {
                "allowed": False,
                "reason": f"no rolebinding grants {category.value} on {kind} "
                f"to {subject}{scope}",
            }

    # -- lifecycle -------------------------------------------------------------------

    def lifecycle(
        self, action: str, ref: ResourceRef, params: dict[str, Any] | None = None
    ) -> dict[str, Any]:
        params = params or {}
        if action not in LIFECYCLE_ACTIONS:
            raise InvalidParams(f"unknown lifecycle action {action!r}")
        with self._lock:
            if action == "scale":
                return self._scale(ref, params)
            if action == "restart":
                pod = self._require_pod(ref)
                pod.restart_count += 1
                pod.phase = "Running"
                self.model.record_event(
                    pod.namespace, "Restarted", f"pod {pod.name} restarted", f"pod/{pod.name}"
                )
                return self._document("pod", pod)
            if action in ("cordon", "uncordon"):
                if not ref.name or ref.name not in self.model.nodes:
                    raise NotFound(f"node {ref.name!r} not found")
                node = self.model.nodes[ref.name]
                node.schedulable = action == "uncordon"
                return self._document("node", node)
            if action == "evict":
                pod = self._require_pod(ref)
                del self.model.pods[(pod.namespace, pod.name)]
                self.model.metrics.pop(("pod", pod.namespace, pod.name), None)
                self._reconcile_ready(pod.namespace, pod.owner_deployment)
                self.model.record_event(
                    pod.namespace, "Evicted", f"pod {pod.name} evicted", f"pod/{pod.name}"
                )
                return self._document("pod", pod)
            # rollout_status
            deployment = self._require_deployment(ref)
            document = self._document("deployment", deployment)
            document["status"]["complete"] = deployment.ready_replicas == deployment.replicas
            return document

    def _require_pod(self, ref: ResourceRef) -> Pod:
        if not ref.namespace or not ref.name:
            raise NotFound("pod reference requires namespace and name")
        pod = self.model.pods.get((ref.namespace, ref.name))
        if pod is None:
            raise NotFound(f"pod {ref.namespace}/{ref.name} not found")
        return pod

    def _require_deployment(self, ref: ResourceRef) -> Deployment:
        if not ref.namespace or not ref.name:
            raise NotFound("deployment reference requires namespace and name")
        deployment = self.model.deployments.get((ref.namespace, ref.name))
        if deployment is None:
            raise NotFound(f"deployment {ref.namespace}/{ref.name} not found")
        return deployment

    def _owned_pods(self, namespace: str, deployment_name: str) -> list[Pod]:
        return sorted(
            (
                pod
                for (ns, _), pod in self.model.pods.items()
                if ns == namespace and pod.owner_deployment == deployment_name
            ),
            key=lambda p: p.name,
        )

    def _reconcile_ready(self, namespace: str, deployment_name: str | None) -> None:
        if deployment_name is None:
            return
        deployment = self.model.deployments.get((namespace, deployment_name))
        if deployment is not None:
            deployment.ready_replicas = len(self._owned_pods(namespace, deployment_name))

    def _scale(self, ref: ResourceRef, params: dict[str, Any]) -> dict[str, Any]:
        deployment = self._require_deployment(ref)
        try:
            replicas = int(params["replicas"])
        except (KeyError, TypeError, ValueError):
            raise InvalidParams("scale requires an integer replicas parameter") from None
        if replicas < 0:
            raise InvalidParams("replicas must be >= 0")
        deployment.replicas = replicas
        owned = self._owned_pods(deployment.namespace, deployment.name)
        while len(owned) > replicas:
            victim = owned.pop()
            del self.model.pods[(victim.namespace, victim.name)]
            self.model.metrics.pop(("pod", victim.namespace, victim.name), None)
        suffix = 0
        while len(owned) < replicas:
            suffix += 1
            candidate = f"{deployment.name}-{suffix}"
            if (deployment.namespace, candidate) in self.model.pods:
                continue
            pod = Pod(
                namespace=deployment.namespace,
                name=candidate,
                phase="Running",
                owner_deployment=deployment.name,
                labels=dict(deployment.labels),
            )
            self.model.pods[(pod.namespace, pod.name)] = pod
            self.model.metrics[("pod", pod.namespace, pod.name)] = PodMetrics()
            owned.append(pod)
        deployment.ready_replicas = len(owned)
        return self._document("deployment", deployment)

    # -- manifests ----------------------------------------------------------------------

    def apply_manifest(self, manifests: list[dict[str, Any]]) -> list[dict[str, Any]]:
        """Create-or-update each resource; outcomes in document order."""
        if not manifests:
            raise ResourceValidationError("manifest document contains no resources")
        outcomes = []
        for manifest in manifests:
            outcome = {
                "kind": manifest.get("kind"),
                "namespace": manifest.get("namespace"),
                "name": manifest.get("name"),
            }
            try:
                ref = ResourceRef(
                    kind=str(manifest.get("kind", "")),
                    namespace=manifest.get("namespace"),
                    name=manifest.get("name"),
                )
                with self._lock:
                    before = self._current_document(ref)
                if before is None:
                    self.write(ref, manifest, "create")
                    outcome["outcome"] = "created"
                else:
                    after = self.write(ref, manifest, "update")
                    outcome["outcome"] = "unchanged" if after == before else "updated"
            except (UnknownKind, ResourceValidationError, AlreadyExists, NotFound) as exc:
                outcome["outcome"] = "error"
                outcome["detail"] = str(exc)
            outcomes.append(outcome)
        return outcomes

    def _current_document(self, ref: ResourceRef) -> dict[str, Any] | None:
        kind = ref.kind.lower()
        if kind == "namespace":
            return (
                self._document("namespace", ref.name)
                if ref.name in self.model.namespaces
                else None
            )
        if kind == "node":
            node = self.model.nodes.get(ref.name or "")
            return self._document("node", node) if node else None
        if kind not in NAMESPACED_KINDS or not ref.namespace or not ref.name:
            return None
        record = self.model.namespaced_tables()[kind].get((ref.namespace, ref.name))
        return self._document(kind, record) if record else None

    # -- snapshot ---------------------------------------------------------------------

    def snapshot(self) -> ClusterModel:
        """Deep copy of the model for oracle comparisons in tests."""
        with self._lock:
            return copy.deepcopy(self.model)
