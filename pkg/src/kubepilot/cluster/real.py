"""Thin adapter mapping the cluster contract onto a live API client.

Everything in-tree runs against FakeClusterBackend; this adapter exists so
the same operation surface is expressible against a real control plane. It
requires the optional ``kubernetes`` package and a kubeconfig path, and is
exercised only by the opt-in integration suite (KUBEPILOT_REAL_CLUSTER=1).
"""

from __future__ import annotations

import time
from typing import Any

from ..errors import BackendFault, NotFound, UnknownKind
from .model import ResourceRef, VerbCategory

_CATEGORY_TO_VERB = {
    VerbCategory.READ: "get",
    VerbCategory.WRITE_MODIFY: "update",
    VerbCategory.DELETE: "delete",
    VerbCategory.EXECUTE_PROXY: "create",  # pods/exec subresource
    VerbCategory.PERMISSION_AUTH: "impersonate",
    VerbCategory.SCALE_LIFECYCLE: "patch",
    VerbCategory.CUSTOM_ADVANCED: "patch",
}


class RealClusterAdapter:
    backend_id = "real"

    def __init__(self, kubeconfig_path: str):
        self.kubeconfig_path = kubeconfig_path
        self._kubernetes = None

    def _sdk(self):
        if self._kubernetes is None:
            try:
                import kubernetes  # type: ignore[import-not-found]
            except ImportError as exc:
                raise BackendFault("real backend requires the 'kubernetes' package") from exc
            kubernetes.config.load_kube_config(config_file=self.kubeconfig_path)
            self._kubernetes = kubernetes
        return self._kubernetes

    def _core(self):
        return self._sdk().client.CoreV1Api()

    def _apps(self):
        return self._sdk().client.AppsV1Api()

    @staticmethod
    def _doc(kind: str, obj: Any) -> dict[str, Any]:
        meta = obj.metadata
        status = getattr(obj, "status", None)
        return {
            "kind": kind,
            "namespace": getattr(meta, "namespace", None),
            "name": meta.name,
            "spec": {},
            "status": {"phase": getattr(status, "phase", None)},
        }

    def read(self, ref: ResourceRef) -> list[dict[str, Any]]:
        kind = ref.kind.lower()
        core, apps = self._core, self._apps
        all_ns = ref.namespace in (None, "ALL")
        try:
            if kind == "namespace":
                items = core().list_namespace().items
            elif kind == "pod":
                items = (
                    core().list_pod_for_all_namespaces().items
                    if all_ns
                    else core().list_namespaced_pod(ref.namespace).items
                )
            elif kind == "deployment":
                items = (
                    apps().list_deployment_for_all_namespaces().items
                    if all_ns
                    else apps().list_namespaced_deployment(ref.namespace).items
                )
            elif kind == "service":
                items = (
                    core().list_service_for_all_namespaces().items
                    if all_ns
                    else core().list_namespaced_service(ref.namespace).items
                )
            elif kind == "configmap":
                items = (
                    core().list_config_map_for_all_namespaces().items
                    if all_ns
                    else core().list_namespaced_config_map(ref.namespace).items
                )
            elif kind == "secret":
                items = (
                    core().list_secret_for_all_namespaces().items
                    if all_ns
                    else core().list_namespaced_secret(ref.namespace).items
                )
            else:
                raise UnknownKind(f"real adapter does not map kind {ref.kind!r}")
        except UnknownKind:
            raise
        except Exception as exc:
            raise BackendFault(str(exc)) from exc
        return [
            self._doc(kind, item)
            for item in items
            if ref.name is None or item.metadata.name == ref.name
        ]

    def get_logs(self, namespace: str, pod: str, tail: int | None = None) -> str:
        try:
            return self._core().read_namespaced_pod_log(pod, namespace, tail_lines=tail)
        except Exception as exc:
            raise NotFound(f"pod {namespace}/{pod}: {exc}") from exc

    def watch_events(
        self,
        namespace: str | None = None,
        max_items: int = 100,
        max_wait_ms: int = 100,
        cursor: int = 0,
    ) -> tuple[list[dict[str, Any]], int]:
        deadline = time.monotonic() + max_wait_ms / 1000.0
        core = self._core()
        try:
            listing = (
                core.list_event_for_all_namespaces()
                if namespace in (None, "ALL")
                else core.list_namespaced_event(namespace)
            )
        except Exception as exc:
            raise BackendFault(str(exc)) from exc
        del deadline  # single bounded poll; the live watch API is out of scope here
        documents = []
        position = 0
        for position, event in enumerate(listing.items, start=1):
            if position <= cursor or len(documents) >= max_items:
                continue
            documents.append(
                {
                    "kind": "event",
                    "namespace": event.metadata.namespace,
                    "name": event.metadata.name,
                    "spec": {
                        "reason": event.reason,
                        "message": event.message,
                        "involved": f"{event.involved_object.kind}/{event.involved_object.name}",
                    },
                    "status": {"timestamp": str(event.last_timestamp)},
                }
            )
        return documents, max(cursor, position)

    def write(self, ref: ResourceRef, manifest: dict[str, Any], mode: str) -> dict[str, Any]:
        body = self._native_body(ref, manifest)
        core, apps = self._core(), self._apps()
        kind = ref.kind.lower()
        try:
            if kind == "deployment":
                if mode == "create":
                    obj = apps.create_namespaced_deployment(ref.namespace, body)
                elif mode == "patch":
                    obj = apps.patch_namespaced_deployment(ref.name, ref.namespace, body)
                else:
                    obj = apps.replace_namespaced_deployment(ref.name, ref.namespace, body)
            elif kind == "configmap":
                if mode == "create":
                    obj = core.create_namespaced_config_map(ref.namespace, body)
                elif mode == "patch":
                    obj = core.patch_namespaced_config_map(ref.name, ref.namespace, body)
                else:
                    obj = core.replace_namespaced_config_map(ref.name, ref.namespace, body)
            elif kind == "secret":
                if mode == "create":
                    obj = core.create_namespaced_secret(ref.namespace, body)
                elif mode == "patch":
                    obj = core.patch_namespaced_secret(ref.name, ref.namespace, body)
                else:
                    obj = core.replace_namespaced_secret(ref.name, ref.namespace, body)
            else:
                raise UnknownKind(f"real adapter does not write kind {ref.kind!r}")
        except UnknownKind:
            raise
        except Exception as exc:
            raise BackendFault(str(exc)) from exc
        return self._doc(kind, obj)

    def _native_body(self, ref: ResourceRef, manifest: dict[str, Any]) -> dict[str, Any]:
        spec = manifest.get("spec", {})
        body: dict[str, Any] = {
            "apiVersion": "apps/v1" if ref.kind.lower() == "deployment" else "v1",
            "kind": ref.kind.capitalize()
            if ref.kind.lower() != "configmap"
            else "ConfigMap",
            "metadata": {"name": ref.name, "namespace": ref.namespace},
        }
        if ref.kind.lower() in ("configmap", "secret"):
            body["data"] = spec.get("data", {})
        else:
            body["spec"] = spec
        return body

    def delete(self, ref: ResourceRef, collection: bool = False) -> int:
        core = self._core()
        kind = ref.kind.lower()
        try:
            if kind != "pod":
                raise UnknownKind(f"real adapter does not delete kind {ref.kind!r}")
            if collection:
                result = core.delete_collection_namespaced_pod(ref.namespace)
                return len(getattr(result, "items", []) or [])
            core.delete_namespaced_pod(ref.name, ref.namespace)
            return 1
        except UnknownKind:
            raise
        except Exception as exc:
            raise BackendFault(str(exc)) from exc

    def exec_in_pod(self, namespace: str, pod: str, command: list[str]) -> dict[str, Any]:
        sdk = self._sdk()
        try:
            stream = sdk.stream.stream(
                self._core().connect_get_namespaced_pod_exec,
                pod,
                namespace,
                command=command,
                stderr=True,
                stdin=False,
                stdout=True,
                tty=False,
            )
            return {"exit_code": 0, "stdout": stream, "stderr": ""}
        except Exception as exc:
            raise BackendFault(str(exc)) from exc

    def access_review(self, subject: str, category: VerbCategory, ref: ResourceRef) -> dict[str, Any]:
        sdk = self._sdk()
        verb = _CATEGORY_TO_VERB[category]
        body = sdk.client.V1SubjectAccessReview(
            spec=sdk.client.V1SubjectAccessReviewSpec(
                user=subject,
                resource_attributes=sdk.client.V1ResourceAttributes(
                    namespace=ref.namespace, verb=verb, resource=f"{ref.kind.lower()}s"
                ),
            )
        )
        try:
            review = sdk.client.AuthorizationV1Api().create_subject_access_review(body)
        except Exception as exc:
            raise BackendFault(str(exc)) from exc
        return {"allowed": bool(review.status.allowed), "reason": review.status.reason or ""}

    def lifecycle(
        self, action: str, ref: ResourceRef, params: dict[str, Any] | None = None
    ) -> dict[str, Any]:
        params = params or {}
        apps, core = self._apps(), self._core()
        try:
            if action == "scale":
                obj = apps.patch_namespaced_deployment_scale(
                    ref.name, ref.namespace, {"spec": {"replicas": int(params["replicas"])}}
                )
                return self._doc("deployment", obj)
            if action in ("cordon", "uncordon"):
                obj = core.patch_node(
                    ref.name, {"spec": {"unschedulable": action == "cordon"}}
                )
                return self._doc("node", obj)
            if action == "evict":
                core.create_namespaced_pod_eviction(
                    ref.name,
                    ref.namespace,
                    {"metadata": {"name": ref.name, "namespace": ref.namespace}},
                )
                return {"kind": "pod", "namespace": ref.namespace, "name": ref.name,
                        "spec": {}, "status": {"evicted": True}}
            if action == "rollout_status":
                obj = apps.read_namespaced_deployment(ref.name, ref.namespace)
                doc = self._doc("deployment", obj)
                doc["status"]["complete"] = (
                    obj.status.ready_replicas or 0
                ) == obj.spec.replicas
                return doc
            if action == "restart":
                core.delete_namespaced_pod(ref.name, ref.namespace)
                return {"kind": "pod", "namespace": ref.namespace, "name": ref.name,
                        "spec": {}, "status": {"restarted": True}}
        except Exception as exc:
            raise BackendFault(str(exc)) from exc
        raise BackendFault(f"unknown lifecycle action {action!r}")

    def apply_manifest(self, manifests: list[dict[str, Any]]) -> list[dict[str, Any]]:
        outcomes = []
        for manifest in manifests:
            ref = ResourceRef(
                kind=str(manifest.get("kind", "")),
                namespace=manifest.get("namespace"),
                name=manifest.get("name"),
            )
            outcome = {"kind": ref.kind, "namespace": ref.namespace, "name": ref.name}
            try:
                existing = self.read(ref)
                if existing:
                    self.write(ref, manifest, "replace")
                    outcome["outcome"] = "updated"
                else:
                    self.write(ref, manifest, "create")
                    outcome["outcome"] = "created"
            except (BackendFault, UnknownKind) as exc:
                outcome["outcome"] = "error"
                outcome["detail"] = str(exc)
            outcomes.append(outcome)
        return outcomes

    def get_metrics(
        self, kind: str, namespace: str | None = None, name: str | None = None
    ) -> list[dict[str, Any]]:
        raise BackendFault("metrics on the real adapter require a metrics server integration")
