from .gateway import LlmGateway, Provider, ProviderRateLimit, TransientProviderError, cache_key
from .mock import MockProvider, MockScenario, ScenarioEntry, load_scenario
from .providers import HttpChatProvider
from .types import LlmRequest, LlmResponse, Message, simple_request

__all__ = [
    "LlmGateway",
    "Provider",
    "ProviderRateLimit",
    "TransientProviderError",
    "cache_key",
    "MockProvider",
    "MockScenario",
    "ScenarioEntry",
    "load_scenario",
    "HttpChatProvider",
    "LlmRequest",
    "LlmResponse",
    "Message",
    "simple_request",
]
