from .fake import FakeClusterBackend
from .fixtures import build_model, seed_fixture
from .model import ClusterModel, ResourceRef, VerbCategory

__all__ = [
    "FakeClusterBackend",
    "build_model",
    "seed_fixture",
    "ClusterModel",
    "ResourceRef",
    "VerbCategory",
]
