"""OpenAI-compatible REST surface over the workflow engine.

POST /v1/chat/completions drives turns and HITL resumption on one session,
bound by the X-Session-Id header: when the session is awaiting input the
user message answers the interrupt, otherwise it starts a new turn.
Interrupts surface as the assistant message with finish_reason="interrupt".
"""

from __future__ import annotations

import time
import uuid
from typing import Any

from fastapi import FastAPI, Header, HTTPException, Request
from fastapi.responses import JSONResponse

from .engine import WorkflowOutcome
from .errors import EngineFault, SessionBusy
from .system import System

SESSION_HEADER = "X-Session-Id"
ROLE_HEADER = "X-Role"


def _chat_response(outcome: WorkflowOutcome, model: str) -> dict[str, Any]:
    finish_reason = "interrupt" if outcome.kind == "interrupt" else "stop"
    return {
        "id": f"chatcmpl-{uuid.uuid4().hex}",
        "object": "chat.completion",
        "created": int(time.time()),
        "model": model,
        "choices": [
            {
                "index": 0,
                "message": {"role": "assistant", "content": outcome.text},
                "finish_reason": finish_reason,
            }
        ],
        "usage": {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0},
    }


def create_app(system: System) -> FastAPI:
    app = FastAPI(title="kubepilot", version="0.1.0")
    app.state.system = system

    def resolve_role(authorization: str | None, role_header: str | None) -> str:
        if system.tokens is not None:
            if not authorization or not authorization.startswith("Bearer "):
                raise HTTPException(status_code=401, detail="bearer token required")
            role = system.tokens.role_for(authorization.removeprefix("Bearer ").strip())
            if role is None:
                raise HTTPException(status_code=401, detail="unknown token")
            return role
        if role_header and system.roles.has(role_header):
            return role_header
        if role_header:
            raise HTTPException(status_code=400, detail=f"unknown role {role_header!r}")
        return system.settings.default_role

    @app.post("/v1/chat/completions")
    async def chat_completions(
        request: Request,
        x_session_id: str | None = Header(default=None, alias=SESSION_HEADER),
        x_role: str | None = Header(default=None, alias=ROLE_HEADER),
        authorization: str | None = Header(default=None),
    ):
        try:
            body = await request.json()
        except Exception:
            raise HTTPException(status_code=400, detail="body must be JSON") from None
        messages = body.get("messages")
        if not isinstance(messages, list) or not messages:
            raise HTTPException(status_code=400, detail="messages must be a non-empty list")
        last = messages[-1]
        if not isinstance(last, dict) or last.get("role") != "user" or not last.get("content"):
            raise HTTPException(status_code=400, detail="last message must be a user message")

        role_name = resolve_role(authorization, x_role)
        session_id = x_session_id or str(body.get("session_id") or "") or uuid.uuid4().hex
        user_text = str(last["content"])
        model = str(body.get("model", system.settings.model_id))

        engine = system.engine
        try:
            if engine.has_pending_interrupt(session_id):
                outcome = engine.resume(session_id, user_text)
            else:
                outcome = engine.run_turn(session_id, user_text, role_name)
        except SessionBusy as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except EngineFault as exc:
            return JSONResponse(
                status_code=500,
                content={"error": {"type": "engine_fault", "message": str(exc)}},
                headers={SESSION_HEADER: session_id},
            )
        return JSONResponse(
            content=_chat_response(outcome, model), headers={SESSION_HEADER: session_id}
        )

    @app.get("/health")
    async def health():
        return system.health()

    @app.get("/v1/sessions/{session_id}")
    async def get_session(session_id: str):
        state = system.engine.get_state(session_id)
        if state is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        checkpoints = system.checkpoints.list_checkpoints(session_id)
        return {
            "session_id": session_id,
            "status": state.status,
            "turn_index": state.turn_index,
            "transcript": [
                {"actor": actor, "content": content} for actor, content in state.transcript
            ],
            "pending_interrupt": state.pending_interrupt.to_payload()
            if state.pending_interrupt
            else None,
            "checkpoints": [
                {
                    "seq": c.seq,
                    "node_name": c.node_name,
                    "cause": c.cause,
                    "created_at": c.created_at,
                }
                for c in checkpoints
            ],
        }

    @app.get("/v1/tools")
    async def get_tools(agent: str | None = None, origin: str | None = None):
        tools = system.registry.list_tools(agent=agent, origin=origin)
        return {
            "tools": [
                {
                    "name": t.name,
                    "description": t.description,
                    "agent": t.owner_agent,
                    "origin": t.origin,
                    "version": t.version,
                    "llm_produced": t.origin == "generated",
                    "input_schema": t.schema_payload(),
                }
                for t in tools
            ]
        }

    return app
