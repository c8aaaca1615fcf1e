"""Exception hierarchy shared across kubepilot subsystems."""


class KubepilotError(Exception):
    """Base class for every error raised by this package."""


# --- LLM gateway -----------------------------------------------------------

class LlmError(KubepilotError):
    """Base class for language-model gateway failures."""


class ProviderUnavailable(LlmError):
    """All retry attempts against the provider were exhausted."""


class RateLimited(LlmError):
    """Provider signalled a quota limit and the retry budget ran out."""


class MalformedResponse(LlmError):
    """Provider returned empty or unusable content."""


class ScenarioParseError(KubepilotError):
    """Mock scenario document could not be parsed."""


class EmptyScenario(ScenarioParseError):
    """Mock scenario document contains no entries."""


# --- query gateway ---------------------------------------------------------

class LlmFailure(KubepilotError):
    """A gateway error surfaced while classifying or routing."""


class PolicyConfigMissing(KubepilotError):
    """Referenced role is not present in the role table."""


class UnknownRole(PolicyConfigMissing):
    """Authorization was asked about an unregistered role."""


# --- workflow engine -------------------------------------------------------

class SessionBusy(KubepilotError):
    """Session has an unanswered interrupt or is executing another turn."""


class EngineFault(KubepilotError):
    """An internal step raised unrecoverably; state was marked failed."""


class DirectiveUnparseable(KubepilotError):
    """Supervisor directive stayed malformed after all retries."""


class UnknownAgent(KubepilotError):
    """Routing directive targeted an agent that is not registered."""


class AgentFault(KubepilotError):
    """An agent raised during dispatch; recorded, not fatal to the engine."""


class NoPendingInterrupt(KubepilotError):
    """resume() was called but the session is not awaiting input."""


class CheckpointMissing(KubepilotError):
    """resume() found no checkpoint to restore the session from."""


# --- memory store ----------------------------------------------------------

class SequenceConflict(KubepilotError):
    """Checkpoint seq is not greater than the latest stored seq."""


class StorageFault(KubepilotError):
    """Underlying storage failed to persist or read a record."""


class NotFound(KubepilotError):
    """Requested record or resource does not exist."""


class CorruptBlob(KubepilotError):
    """Serialized state failed integrity or shape validation."""


# --- agent registry --------------------------------------------------------

class DuplicateAgent(KubepilotError):
    """Agent descriptor set names the same agent twice."""


class MissingAgent(KubepilotError):
    """Agent descriptor set does not cover the required agents."""


class InvalidSelection(KubepilotError):
    """LLM named an unknown tool after directive retries."""


class SchemaViolation(KubepilotError):
    """Tool arguments do not satisfy the tool's input schema."""


class NameCollision(KubepilotError):
    """Tool name already registered with different content."""


# --- codegen ---------------------------------------------------------------

class EmptyGeneration(KubepilotError):
    """Code generation produced no script text."""


class MetadataMismatch(KubepilotError):
    """Extracted metadata disagrees with the parsed script."""


# --- sandbox ---------------------------------------------------------------

class SandboxUnavailable(KubepilotError):
    """Sandbox infrastructure fault (interpreter missing, spawn failure)."""


# --- cluster interface -----------------------------------------------------

class ClusterError(KubepilotError):
    """Base class for cluster-backend failures."""


class UnknownKind(ClusterError):
    """Resource kind is not supported by the backend."""


class BackendFault(ClusterError):
    """Backend infrastructure failure."""


class AlreadyExists(ClusterError):
    """create targeted a resource that already exists."""


class ResourceValidationError(ClusterError):
    """Manifest is invalid for its kind."""


class PodNotRunning(ClusterError):
    """exec targeted a pod that is not in Running phase."""


class UnknownSubject(ClusterError):
    """Access review subject has no RBAC records."""


class InvalidParams(ClusterError):
    """Lifecycle action was given out-of-range parameters."""


class FixtureNotFound(ClusterError):
    """Named fixture document does not exist."""
