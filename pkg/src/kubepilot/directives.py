"""Delimited machine-readable directive blocks exchanged with the LLM.

Every structured decision the model communicates back (query classification,
routing, tool selection, metadata) travels inside one block::

    <<<
    {"action": "route_agent", "target_agent": "Logs"}
    >>>

Free prose outside the block is ignored. The block body is a single JSON
object; the last block wins when the model emits several.
"""

from __future__ import annotations

import json
import re
from typing import Any

BLOCK_OPEN = "<<<"
BLOCK_CLOSE = ">>>"

_BLOCK_RE = re.compile(r"^<<<\s*$(.*?)^>>>\s*$", re.DOTALL | re.MULTILINE)


class DirectiveError(ValueError):
    """Response carried no parseable directive block."""


def extract_block(text: str) -> dict[str, Any]:
    """Return the JSON object of the last directive block in ``text``.

    Raises DirectiveError when no block is present or the body is not a
    JSON object.
    """
    matches = _BLOCK_RE.findall(text or "")
    if not matches:
        raise DirectiveError("no directive block found")
    body = matches[-1].strip()
    try:
        value = json.loads(body)
    except json.JSONDecodeError as exc:
        raise DirectiveError(f"directive block is not valid JSON: {exc}") from exc
    if not isinstance(value, dict):
        raise DirectiveError("directive block must hold a JSON object")
    return value


def render_block(payload: dict[str, Any]) -> str:
    """Render ``payload`` as a directive block (used by tests and fixtures)."""
    body = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return f"{BLOCK_OPEN}\n{body}\n{BLOCK_CLOSE}"


def require_fields(directive: dict[str, Any], *names: str) -> None:
    """Raise DirectiveError unless every named field is present and non-null."""
    for name in names:
        if directive.get(name) in (None, ""):
            raise DirectiveError(f"directive missing required field {name!r}")
