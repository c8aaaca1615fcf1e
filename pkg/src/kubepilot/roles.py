"""User roles: named sets of permitted verb categories."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from .cluster.model import VerbCategory
from .errors import UnknownRole


@dataclass(frozen=True)
class UserRole:
    name: str
    allowed_categories: frozenset[VerbCategory]
    read_only: bool = False

    def __post_init__(self) -> None:
        if self.read_only and not self.allowed_categories <= {VerbCategory.READ}:
            raise ValueError(
                f"read-only role {self.name!r} may only hold the read category"
            )

    def allows(self, category: VerbCategory) -> bool:
        return category in self.allowed_categories


ADMIN_CATEGORIES = frozenset(VerbCategory)

DEFAULT_ROLES = (
    UserRole("viewer", frozenset({VerbCategory.READ}), read_only=True),
    UserRole("operator", frozenset(VerbCategory) - {VerbCategory.DELETE}),
    UserRole("admin", ADMIN_CATEGORIES),
)


class RoleTable:
    """Role registry loaded once at startup."""

    def __init__(self, roles: list[UserRole] | tuple[UserRole, ...] = DEFAULT_ROLES):
        self._roles: dict[str, UserRole] = {}
        for role in roles:
            if role.name in self._roles:
                raise ValueError(f"duplicate role name {role.name!r}")
            self._roles[role.name] = role

    def get(self, name: str) -> UserRole:
        try:
            return self._roles[name]
        except KeyError:
            raise UnknownRole(f"role {name!r} is not registered") from None

    def has(self, name: str) -> bool:
        return name in self._roles

    def names(self) -> list[str]:
        return sorted(self._roles)


def load_roles(source: str | Path) -> RoleTable:
    """Load a role table from a YAML document: a list under ``roles``."""
    text = Path(source).read_text() if isinstance(source, Path) else source
    document = yaml.safe_load(text) or {}
    roles = []
    for item in document.get("roles", []):
        roles.append(
            UserRole(
                name=str(item["name"]),
                allowed_categories=frozenset(
                    VerbCategory.parse(c) for c in item.get("allowed_categories", [])
                ),
                read_only=bool(item.get("read_only", False)),
            )
        )
    if not roles:
        raise ValueError("role document defines no roles")
    return RoleTable(roles)
