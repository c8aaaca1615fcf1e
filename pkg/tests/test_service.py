"""REST surface: chat completions with HITL, health, sessions, tools."""

from __future__ import annotations

from fastapi.testclient import TestClient

from conftest import build_harness, entry
from kubepilot.config import Settings, TokenTable
from kubepilot.llm import HttpChatProvider
from kubepilot.service import create_app
from kubepilot.system import System
from test_engine import JOBS_QUERY, PODS_QUERY, codegen_scenario, pods_scenario


def make_system(entries: list[dict], **harness_kwargs) -> System:
    harness = build_harness(entries, **harness_kwargs)
    return System(
        settings=Settings(),
        llm=harness.llm,
        roles=harness.roles,
        backend=harness.backend,
        audit=harness.audit,
        checkpoints=harness.checkpoints,
        registry=harness.registry,
        codegen=harness.codegen,
        engine=harness.engine,
    )


def client_for(entries: list[dict], **harness_kwargs) -> TestClient:
    return TestClient(create_app(make_system(entries, **harness_kwargs)))


def chat(client: TestClient, text: str, session: str = "s1", role: str = "admin"):
    return client.post(
        "/v1/chat/completions",
        json={"model": "any", "messages": [{"role": "user", "content": text}]},
        headers={"X-Session-Id": session, "X-Role": role},
    )


class TestChatCompletions:
    def test_pods_query_completes_with_stop(self):
        client = client_for(pods_scenario())
        response = chat(client, PODS_QUERY)
        assert response.status_code == 200
        body = response.json()
        assert len(body["choices"]) == 1
        choice = body["choices"][0]
        assert choice["finish_reason"] == "stop"
        assert choice["message"]["role"] == "assistant"
        assert "worker-1" in choice["message"]["content"]
        assert body["usage"] == {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0}
        assert response.headers["X-Session-Id"] == "s1"

    def test_interrupt_then_resume_over_the_wire(self):
        client = client_for(codegen_scenario())
        first = chat(client, JOBS_QUERY)
        assert first.json()["choices"][0]["finish_reason"] == "interrupt"
        assert "Approve generation" in first.json()["choices"][0]["message"]["content"]

        second = chat(client, "yes")  # same session header: answers the interrupt
        assert second.json()["choices"][0]["finish_reason"] == "stop"

        tools = client.get("/v1/tools", params={"origin": "generated"}).json()["tools"]
        assert [t["name"] for t in tools] == ["summarize_job_failures"]
        assert tools[0]["llm_produced"] is True

    def test_empty_messages_is_400(self):
        client = client_for([])
        response = client.post("/v1/chat/completions", json={"messages": []})
        assert response.status_code == 400

    def test_last_message_must_be_user(self):
        client = client_for([])
        response = client.post(
            "/v1/chat/completions",
            json={"messages": [{"role": "assistant", "content": "hi"}]},
        )
        assert response.status_code == 400

    def test_stream_flag_accepted_as_single_final_chunk(self):
        client = client_for([])
        response = client.post(
            "/v1/chat/completions",
            json={"stream": True, "messages": [{"role": "user", "content": "hi"}]},
            headers={"X-Session-Id": "s1", "X-Role": "admin"},
        )
        assert response.status_code == 200
        assert len(response.json()["choices"]) == 1

    def test_session_generated_when_absent(self):
        client = client_for([])
        response = client.post(
            "/v1/chat/completions",
            json={"messages": [{"role": "user", "content": "hi"}]},
        )
        assert response.status_code == 200
        assert response.headers["X-Session-Id"]

    def test_unknown_role_header_is_400(self):
        client = client_for([])
        response = chat(client, "hello world", role="czar")
        assert response.status_code == 400

    def test_busy_session_is_409(self):
        system = make_system([])
        client = TestClient(create_app(system))
        lease = system.engine._lease("s1")
        lease.acquire()
        try:
            response = chat(client, "list pods everywhere please")
            assert response.status_code == 409
        finally:
            lease.release()

    def test_engine_fault_is_500_with_checkpoint(self):
        from conftest import ACCEPTED_READ

        client = client_for(
            [
                entry("## classify-query", ACCEPTED_READ),
                entry("## supervisor-route", "garbled"),
                entry("previous directive invalid", "garbled"),
                entry("previous directive invalid", "garbled"),
            ]
        )
        response = chat(client, PODS_QUERY)
        assert response.status_code == 500
        session = client.get("/v1/sessions/s1").json()
        assert session["status"] == "failed"
        assert session["checkpoints"][-1]["cause"] == "failure"


class TestAuth:
    def _client_with_tokens(self) -> TestClient:
        system = make_system([])
        system.tokens = TokenTable(tokens={"sekrit-admin": "admin", "sekrit-view": "viewer"})
        return TestClient(create_app(system))

    def test_missing_bearer_is_401(self):
        client = self._client_with_tokens()
        response = client.post(
            "/v1/chat/completions",
            json={"messages": [{"role": "user", "content": "hi"}]},
        )
        assert response.status_code == 401

    def test_unknown_token_is_401(self):
        client = self._client_with_tokens()
        response = client.post(
            "/v1/chat/completions",
            json={"messages": [{"role": "user", "content": "hi"}]},
            headers={"Authorization": "Bearer wrong"},
        )
        assert response.status_code == 401

    def test_role_derived_from_token(self):
        client = self._client_with_tokens()
        response = client.post(
            "/v1/chat/completions",
            json={"messages": [{"role": "user", "content": "hi"}]},
            headers={"Authorization": "Bearer sekrit-view", "X-Session-Id": "s9"},
        )
        assert response.status_code == 200  # prefilter rejection, but authorized


class TestHealth:
    def test_ok_with_mock_provider(self):
        client = client_for([])
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["components"] == {
            "provider": True,
            "checkpoint_store": True,
            "registry": True,
        }

    def test_degraded_when_checkpoint_file_missing(self, tmp_path):
        from kubepilot.checkpoints import FileCheckpointStore

        store = FileCheckpointStore(tmp_path / "cp.log")
        system = make_system([], checkpoints=store)
        store.path.unlink()  # fault injection: backing file vanished
        client = TestClient(create_app(system))
        body = client.get("/health").json()
        assert body["status"] == "degraded"
        assert body["components"]["checkpoint_store"] is False

    def test_degraded_when_provider_unreachable(self):
        system = make_system([])
        system.llm.provider = HttpChatProvider("http://127.0.0.1:9", timeout_s=0.2)
        client = TestClient(create_app(system))
        body = client.get("/health").json()
        assert body["status"] == "degraded"
        assert body["components"]["provider"] is False


class TestSessions:
    def test_completed_turn_projection(self):
        client = client_for(pods_scenario())
        chat(client, PODS_QUERY)
        body = client.get("/v1/sessions/s1").json()
        assert body["status"] == "completed"
        assert len(body["transcript"]) >= 3
        assert body["pending_interrupt"] is None
        seqs = [c["seq"] for c in body["checkpoints"]]
        assert seqs == sorted(seqs)

    def test_unknown_session_404(self):
        client = client_for([])
        assert client.get("/v1/sessions/ghost").status_code == 404

    def test_awaiting_session_exposes_interrupt(self):
        client = client_for(codegen_scenario())
        chat(client, JOBS_QUERY)
        body = client.get("/v1/sessions/s1").json()
        assert body["status"] == "awaiting_human"
        assert body["pending_interrupt"]["kind"] == "approval"

    def test_projection_is_read_only(self):
        client = client_for(pods_scenario())
        chat(client, PODS_QUERY)
        before = client.get("/v1/sessions/s1").json()
        again = client.get("/v1/sessions/s1").json()
        assert before == again


class TestTools:
    def test_generated_filter_empty_on_fresh_system(self):
        client = client_for([])
        assert client.get("/v1/tools", params={"origin": "generated"}).json()["tools"] == []

    def test_logs_agent_builtins(self):
        client = client_for([])
        tools = client.get("/v1/tools", params={"agent": "Logs"}).json()["tools"]
        assert [t["name"] for t in tools] == [
            "get_pod_logs",
            "list_namespace_events",
            "watch_events",
        ]
        assert all(t["llm_produced"] is False for t in tools)


class TestStatelessness:
    def test_resume_works_after_service_restart(self, tmp_path):
        from kubepilot.checkpoints import FileCheckpointStore

        checkpoint_path = tmp_path / "cp.log"
        registry_dir = tmp_path / "tools"
        first = make_system(
            codegen_scenario(),
            checkpoints=FileCheckpointStore(checkpoint_path),
            registry_dir=registry_dir,
        )
        client_one = TestClient(create_app(first))
        response = chat(client_one, JOBS_QUERY)
        assert response.json()["choices"][0]["finish_reason"] == "interrupt"

        second = make_system(
            codegen_scenario(),
            checkpoints=FileCheckpointStore(checkpoint_path),
            registry_dir=registry_dir,
        )
        client_two = TestClient(create_app(second))
        resumed = chat(client_two, "yes")
        assert resumed.status_code == 200
        assert resumed.json()["choices"][0]["finish_reason"] == "stop"
        tools = client_two.get("/v1/tools", params={"origin": "generated"}).json()["tools"]
        assert [t["name"] for t in tools] == ["summarize_job_failures"]
