"""LLM-orchestrated Kubernetes control.

Natural-language queries become validated, checkpointed multi-agent
workflows over the full cluster verb surface, with runtime tool synthesis
through a sandboxed generate-test-evaluate-register pipeline and
human-in-the-loop interrupts throughout.
"""

from .audit import AuditLog, AuditRecord, authorize
from .checkpoints import (
    Checkpoint,
    FileCheckpointStore,
    InMemoryCheckpointStore,
    restore_state,
    serialize_state,
)
from .cluster import ClusterModel, FakeClusterBackend, ResourceRef, VerbCategory, seed_fixture
from .codegen import CodegenPipeline, PipelineRun, Verdict
from .config import Settings
from .engine import WorkflowEngine, WorkflowOutcome
from .llm import LlmGateway, MockProvider, load_scenario
from .querygate import QueryGateway, StructuredQuery
from .registry import AgentRegistry
from .roles import RoleTable, UserRole, load_roles
from .sandbox import SandboxPolicy, SandboxResult, execute_script, static_scan
from .state import InterruptRequest, RoutingDecision, WorkflowState
from .system import System, build_system
from .tooling import AgentDescriptor, FieldSpec, ToolResult, ToolSpec

__version__ = "0.1.0"

__all__ = [
    "AuditLog",
    "AuditRecord",
    "authorize",
    "Checkpoint",
    "FileCheckpointStore",
    "InMemoryCheckpointStore",
    "restore_state",
    "serialize_state",
    "ClusterModel",
    "FakeClusterBackend",
    "ResourceRef",
    "VerbCategory",
    "seed_fixture",
    "CodegenPipeline",
    "PipelineRun",
    "Verdict",
    "Settings",
    "WorkflowEngine",
    "WorkflowOutcome",
    "LlmGateway",
    "MockProvider",
    "load_scenario",
    "QueryGateway",
    "StructuredQuery",
    "AgentRegistry",
    "RoleTable",
    "UserRole",
    "load_roles",
    "SandboxPolicy",
    "SandboxResult",
    "execute_script",
    "static_scan",
    "InterruptRequest",
    "RoutingDecision",
    "WorkflowState",
    "System",
    "build_system",
    "AgentDescriptor",
    "FieldSpec",
    "ToolResult",
    "ToolSpec",
]
