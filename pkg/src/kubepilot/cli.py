"""Command line entry points: serve, seed, replay."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import yaml

from .cluster.fixtures import seed_fixture
from .config import Settings
from .errors import EngineFault, KubepilotError
from .llm import MockProvider, load_scenario
from .system import build_system


@click.group()
def main() -> None:
    """LLM-orchestrated cluster control."""


@main.command()
@click.option("--host", default=None, help="Override listen host")
@click.option("--port", default=None, type=int, help="Override listen port")
def serve(host: str | None, port: int | None) -> None:
    """Start the API service (settings from KUBEPILOT_* env vars)."""
    import uvicorn

    from .service import create_app

    settings = Settings.from_env()
    listen_host, _, listen_port = settings.listen.partition(":")
    system = build_system(settings)
    app = create_app(system)
    uvicorn.run(
        app,
        host=host or listen_host or "127.0.0.1",
        port=port or int(listen_port or 8080),
    )


@main.command()
@click.argument("fixture")
def seed(fixture: str) -> None:
    """Load a fake-cluster fixture and print its resource summary."""
    try:
        model = seed_fixture(fixture)
    except KubepilotError as exc:
        raise click.ClickException(str(exc)) from exc
    summary = {
        "fixture": fixture,
        "namespaces": sorted(model.namespaces),
        "pods": len(model.pods),
        "deployments": len(model.deployments),
        "services": len(model.services),
        "configmaps": len(model.configmaps),
        "secrets": len(model.secrets),
        "roles": len(model.roles),
        "rolebindings": len(model.rolebindings),
        "jobs": len(model.jobs),
        "nodes": len(model.nodes),
        "events": len(model.events),
    }
    click.echo(json.dumps(summary, indent=2))


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, path_type=Path))
def replay(scenario_file: Path) -> None:
    """Run a headless scenario (fixture + scripted mock + turns) for CI.

    Scenario document fields: fixture (name), mock (inline scenario or a
    path), turns (list of {user, role?, session?}). Prints one JSON line
    per turn outcome; exits non-zero on an engine fault.
    """
    document = yaml.safe_load(scenario_file.read_text()) or {}
    mock = document.get("mock")
    if isinstance(mock, str):
        scenario = load_scenario(Path(mock) if not Path(mock).is_absolute() else Path(mock))
    else:
        scenario = load_scenario(mock or {})

    settings = Settings.from_env()
    settings.backend = f"fake:{document.get('fixture', 'demo')}"
    settings.mock_scenario_path = ""
    system = build_system(settings)
    system.llm.provider = MockProvider(scenario)

    failures = 0
    for position, turn in enumerate(document.get("turns", [])):
        session_id = str(turn.get("session", "replay"))
        role = str(turn.get("role", settings.default_role))
        text = str(turn["user"])
        try:
            if system.engine.has_pending_interrupt(session_id):
                outcome = system.engine.resume(session_id, text)
            else:
                outcome = system.engine.run_turn(session_id, text, role)
            record = {
                "turn": position,
                "session": session_id,
                "kind": outcome.kind,
                "text": outcome.text,
            }
        except (EngineFault, KubepilotError) as exc:
            failures += 1
            record = {"turn": position, "session": session_id, "kind": "fault", "error": str(exc)}
        click.echo(json.dumps(record))
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
