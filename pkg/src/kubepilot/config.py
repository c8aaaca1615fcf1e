"""Environment-driven runtime settings."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

ENV_PREFIX = "KUBEPILOT_"


def _env(name: str, default: str = "") -> str:
    return os.environ.get(ENV_PREFIX + name, default)


@dataclass
class Settings:
    listen: str = "127.0.0.1:8080"
    backend: str = "fake:demo"  # fake:<fixture> | real:<kubeconfig path>
    checkpoint_path: str = ""  # empty -> in-memory store
    audit_path: str = ""  # empty -> in-memory log
    registry_dir: str = ""  # empty -> no generated-tool persistence
    artifacts_dir: str = ""  # codegen run artifacts
    provider_url: str = ""
    provider_key: str = ""
    model_id: str = "gpt-4o"
    mock_scenario_path: str = ""  # when set, the scripted mock provider is used
    roles_path: str = ""  # empty -> built-in viewer/operator/admin
    auth_tokens_path: str = ""  # empty -> role taken from X-Role header
    default_role: str = "viewer"

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            listen=_env("LISTEN", "127.0.0.1:8080"),
            backend=_env("BACKEND", "fake:demo"),
            checkpoint_path=_env("CHECKPOINT_PATH"),
            audit_path=_env("AUDIT_PATH"),
            registry_dir=_env("REGISTRY_DIR"),
            artifacts_dir=_env("ARTIFACTS_DIR"),
            provider_url=_env("PROVIDER_URL"),
            provider_key=_env("PROVIDER_KEY"),
            model_id=_env("MODEL", "gpt-4o"),
            mock_scenario_path=_env("MOCK_SCENARIO"),
            roles_path=_env("ROLES"),
            auth_tokens_path=_env("AUTH_TOKENS"),
            default_role=_env("DEFAULT_ROLE", "viewer"),
        )


@dataclass
class TokenTable:
    """Static bearer-token auth: token -> role name."""

    tokens: dict[str, str] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "TokenTable":
        document = yaml.safe_load(Path(path).read_text()) or {}
        tokens = {str(k): str(v) for k, v in (document.get("tokens") or {}).items()}
        return cls(tokens=tokens)

    def role_for(self, token: str) -> str | None:
        return self.tokens.get(token)
