"""Deterministic scripted provider used by every test and CI replay.

A scenario is an ordered list of entries. Each entry matches a request by
substring over the rendered prompt (``match``, or ``match_all`` for a
conjunction of substrings), by sequence index (the Nth completion issued
against the scenario), or a combination. Entries are consumed in document
order: the first unconsumed matching entry answers the request, so repeated
similar prompts walk down the list deterministically. ``reusable: true``
exempts an entry from consumption (useful for benchmark loops).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from ..errors import EmptyScenario, MalformedResponse, ScenarioParseError
from .types import LlmRequest


@dataclass
class ScenarioEntry:
    response: str
    match: str | None = None
    match_all: list[str] | None = None  # conjunction of substrings
    index: int | None = None
    reusable: bool = False
    consumed: bool = False

    def matches(self, rendered: str, call_index: int) -> bool:
        if self.consumed and not self.reusable:
            return False
        if self.index is not None and self.index != call_index:
            return False
        if self.match is not None and self.match not in rendered:
            return False
        if self.match_all is not None and not all(m in rendered for m in self.match_all):
            return False
        return self.index is not None or self.match is not None or self.match_all is not None


@dataclass
class MockScenario:
    entries: list[ScenarioEntry]
    strict: bool = False

    def reset(self) -> None:
        for entry in self.entries:
            entry.consumed = False


def load_scenario(source: str | Path | dict[str, Any]) -> MockScenario:
    """Parse a scenario document (YAML/JSON text, path, or mapping)."""
    if isinstance(source, Path):
        try:
            raw = source.read_text()
        except OSError as exc:
            raise ScenarioParseError(f"cannot read scenario file: {exc}") from exc
        return load_scenario(raw)
    if isinstance(source, str):
        try:
            document = yaml.safe_load(source)
        except yaml.YAMLError as exc:
            raise ScenarioParseError(f"scenario does not parse: {exc}") from exc
    else:
        document = source
    if not isinstance(document, dict):
        raise ScenarioParseError("scenario document must be a mapping")
    raw_entries = document.get("entries")
    if raw_entries is None or raw_entries == []:
        raise EmptyScenario("scenario has no entries")
    if not isinstance(raw_entries, list):
        raise ScenarioParseError("entries must be a list")

    entries: list[ScenarioEntry] = []
    seen_indices: set[int] = set()
    for position, item in enumerate(raw_entries):
        if not isinstance(item, dict):
            raise ScenarioParseError(f"entry {position} must be a mapping")
        match = item.get("match")
        match_all = item.get("match_all")
        index = item.get("index")
        if match is None and index is None and match_all is None:
            raise ScenarioParseError(f"entry {position} needs a match, match_all, or an index")
        if match is not None and not isinstance(match, str):
            raise ScenarioParseError(f"entry {position} match must be a string")
        if match_all is not None and (
            not isinstance(match_all, list)
            or not match_all
            or not all(isinstance(m, str) for m in match_all)
        ):
            raise ScenarioParseError(f"entry {position} match_all must be a list of strings")
        if index is not None:
            if not isinstance(index, int) or index < 0:
                raise ScenarioParseError(f"entry {position} index must be a non-negative integer")
            if index in seen_indices:
                raise ScenarioParseError(f"duplicate sequence index {index}")
            seen_indices.add(index)
        if "response" not in item:
            raise ScenarioParseError(f"entry {position} is missing a response")
        entries.append(
            ScenarioEntry(
                response=str(item["response"]),
                match=match,
                match_all=list(match_all) if match_all else None,
                index=index,
                reusable=bool(item.get("reusable", False)),
            )
        )
    return MockScenario(entries=entries, strict=bool(document.get("strict", False)))


class MockProvider:
    """In-process provider that replays a MockScenario."""

    provider_id = "mock"

    def __init__(self, scenario: MockScenario):
        self.scenario = scenario
        self._lock = threading.Lock()
        self._call_index = 0

    @property
    def calls_served(self) -> int:
        return self._call_index

    def complete(self, request: LlmRequest) -> str:
        rendered = request.rendered()
        with self._lock:
            call_index = self._call_index
            self._call_index += 1
            hits = [e for e in self.scenario.entries if e.matches(rendered, call_index)]
            if self.scenario.strict and len(hits) != 1:
                raise MalformedResponse(
                    f"strict scenario matched {len(hits)} entries for call {call_index}: "
                    f"{rendered[:160]!r}"
                )
            if not hits:
                raise MalformedResponse(
                    f"no scenario entry matches call {call_index}: {rendered[:160]!r}"
                )
            entry = hits[0]
            entry.consumed = True
            return entry.response
