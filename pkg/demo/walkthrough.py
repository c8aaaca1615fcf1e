#!/usr/bin/env python3
"""In-process tour: query -> routing -> interrupt -> approval -> new tool.

Builds the full system against the demo fixture and the scripted mock
provider from demo/codegen_replay.yaml, then drives one session through the
engine, printing the transcript, checkpoints, and registry as it goes.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from kubepilot.config import Settings
from kubepilot.llm import MockProvider, load_scenario
from kubepilot.system import build_system

HERE = Path(__file__).parent


def main() -> None:
    document = yaml.safe_load((HERE / "codegen_replay.yaml").read_text())
    settings = Settings(backend=f"fake:{document['fixture']}")
    system = build_system(settings)
    system.llm.provider = MockProvider(load_scenario(document["mock"]))
    engine = system.engine

    print("== health ==")
    print(system.health())

    print("\n== turn 1: a query no builtin tool can answer ==")
    outcome = engine.run_turn("tour", "Summarize which jobs have failed across all namespaces", "admin")
    print(f"outcome: {outcome.kind}")
    print(f"prompt to the human: {outcome.text}")

    print("\n== human approves; the codegen pipeline runs ==")
    outcome = engine.resume("tour", "yes")
    print(f"outcome: {outcome.kind}")
    print(outcome.text)

    print("\n== generated tools now in the registry ==")
    for tool in system.registry.list_tools(origin="generated"):
        print(f"  {tool.name} v{tool.version} (owner: {tool.owner_agent})")

    print("\n== transcript ==")
    state = engine.get_state("tour")
    for actor, content in state.transcript:
        first_line = content.splitlines()[0] if content else ""
        print(f"  [{actor}] {first_line[:100]}")

    print("\n== checkpoints ==")
    for checkpoint in system.checkpoints.list_checkpoints("tour"):
        print(f"  seq={checkpoint.seq:<3} cause={checkpoint.cause:<13} node={checkpoint.node_name}")

    print("\n== audit trail (counts by action) ==")
    counts: dict[str, int] = {}
    for record in system.audit.query(session_id="tour"):
        counts[record.action] = counts.get(record.action, 0) + 1
    for action, count in sorted(counts.items()):
        print(f"  {action}: {count}")


if __name__ == "__main__":
    main()
