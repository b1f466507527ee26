"""HTTP facade tests: auth, error envelopes, and ledger-backed endpoints."""

from datetime import datetime, timezone

import pytest
from fastapi.testclient import TestClient

from coopetition import __version__
from coopetition.analytics import import_graph
from coopetition.fixtures import demo_tokens, write_demo_dataset
from coopetition.marketplace import UploadWindow
from coopetition.rulebook import bundled_rulebook
from coopetition.runtime import CompetitionEvent, EventLedger
from coopetition.service import (
    LEDGER_FILENAME,
    SNAPSHOT_FILENAME,
    ServiceConfig,
    create_app,
    leaderboard_payload,
)

UTC = timezone.utc
ADMIN = {"Authorization": "Bearer root-token"}


def auth(token: str) -> dict[str, str]:
    return {"Authorization": f"Bearer {token}"}


def register(client: TestClient, team_id: str, league: str = "IRL", roles=None) -> str:
    body = {
        "id": team_id,
        "name": team_id.upper(),
        "institution": "Test Lab",
        "league_id": league,
    }
    if roles is not None:
        body["roles"] = roles
    resp = client.post("/teams", json=body, headers=ADMIN)
    assert resp.status_code == 201, resp.text
    return resp.json()["token"]


def upload(client: TestClient, token: str, module_id: str, developers: list[str]) -> dict:
    resp = client.post(
        "/modules",
        json={
            "id": module_id,
            "name": f"Module {module_id}",
            "category": "other",
            "developer_team_ids": developers,
        },
        headers=auth(token),
    )
    assert resp.status_code == 201, resp.text
    return resp.json()["module"]


@pytest.fixture()
def fresh_client():
    window = UploadWindow(
        "w-open",
        datetime(2026, 1, 1, tzinfo=UTC),
        datetime(2027, 1, 1, tzinfo=UTC),
    )
    config = ServiceConfig(windows=(window,), admin_token="root-token")
    with TestClient(create_app(config)) as client:
        yield client


@pytest.fixture()
def demo_dir(tmp_path):
    write_demo_dataset(tmp_path)
    return tmp_path


@pytest.fixture()
def demo_config(demo_dir):
    return ServiceConfig(
        data_dir=demo_dir, admin_token="root-token", tokens=demo_tokens()
    )


@pytest.fixture()
def demo_client(demo_config):
    with TestClient(create_app(demo_config)) as client:
        yield client


class TestHealthAndAuth:
    def test_health_is_public(self, fresh_client):
        resp = fresh_client.get("/health")
        assert resp.status_code == 200
        body = resp.json()
        assert body == {
            "schema_version": 1,
            "status": "ok",
            "version": __version__,
        }

    def test_mutation_without_token_is_401(self, fresh_client):
        resp = fresh_client.post(
            "/teams",
            json={"id": "x", "name": "X", "institution": "L", "league_id": "IRL"},
        )
        assert resp.status_code == 401
        body = resp.json()
        assert body["schema_version"] == 1
        assert body["error"]["type"] == "AuthenticationRequired"

    def test_unknown_token_is_401(self, fresh_client):
        resp = fresh_client.post(
            "/teams",
            json={"id": "x", "name": "X", "institution": "L", "league_id": "IRL"},
            headers=auth("nope"),
        )
        assert resp.status_code == 401
        assert "unknown token" in resp.json()["error"]["detail"]

    def test_non_bearer_scheme_is_401(self, fresh_client):
        resp = fresh_client.post(
            "/teams",
            json={"id": "x", "name": "X", "institution": "L", "league_id": "IRL"},
            headers={"Authorization": "Basic root-token"},
        )
        assert resp.status_code == 401

    def test_team_token_cannot_register_teams(self, fresh_client):
        token = register(fresh_client, "team-a")
        resp = fresh_client.post(
            "/teams",
            json={"id": "team-b", "name": "B", "institution": "L", "league_id": "IRL"},
            headers=auth(token),
        )
        assert resp.status_code == 403
        assert resp.json()["error"]["type"] == "Unauthorized"

    def test_malformed_body_is_400_with_envelope(self, fresh_client):
        resp = fresh_client.post("/teams", json={}, headers=ADMIN)
        assert resp.status_code == 400
        body = resp.json()
        assert body["schema_version"] == 1
        assert body["error"]["type"] == "ValidationError"


class TestRegistryAndMarketplace:
    def test_registration_returns_working_token(self, fresh_client):
        token = register(fresh_client, "team-a")
        module = upload(fresh_client, token, "mod-a", ["team-a"])
        assert module["id"] == "mod-a"
        listed = fresh_client.get("/modules").json()["modules"]
        assert [m["id"] for m in listed] == ["mod-a"]

    def test_duplicate_team_id_is_409(self, fresh_client):
        register(fresh_client, "team-a")
        resp = fresh_client.post(
            "/teams",
            json={"id": "team-a", "name": "A", "institution": "L", "league_id": "IRL"},
            headers=ADMIN,
        )
        assert resp.status_code == 409
        assert resp.json()["error"]["type"] == "DuplicateId"

    def test_unknown_role_is_400(self, fresh_client):
        resp = fresh_client.post(
            "/teams",
            json={
                "id": "x",
                "name": "X",
                "institution": "L",
                "league_id": "IRL",
                "roles": ["overlord"],
            },
            headers=ADMIN,
        )
        assert resp.status_code == 400
        assert "overlord" in resp.json()["error"]["detail"]

    def test_module_filtering_by_category(self, fresh_client):
        token = register(fresh_client, "team-a")
        upload(fresh_client, token, "mod-a", ["team-a"])
        none = fresh_client.get("/modules", params={"category": "datasets_models"})
        assert none.json()["modules"] == []
        bad = fresh_client.get("/modules", params={"category": "warp_drives"})
        assert bad.status_code == 400

    def test_self_integration_is_rejected(self, fresh_client):
        token = register(fresh_client, "team-a")
        upload(fresh_client, token, "mod-a", ["team-a"])
        resp = fresh_client.post(
            "/integrations",
            json={
                "module_id": "mod-a",
                "league_id": "IRL",
                "task_id": "task-board",
                "milestone_id": "MS1",
            },
            headers=auth(token),
        )
        assert resp.status_code == 400
        assert resp.json()["error"]["type"] == "SelfIntegration"

    def test_declaration_flow_with_referee_verification(self, fresh_client):
        dev = register(fresh_client, "team-a")
        user = register(fresh_client, "team-b")
        ref = register(fresh_client, "ref-1", roles=["referee"])
        upload(fresh_client, dev, "mod-a", ["team-a"])
        declared = fresh_client.post(
            "/integrations",
            json={
                "module_id": "mod-a",
                "league_id": "IRL",
                "task_id": "task-board",
                "milestone_id": "MS1",
            },
            headers=auth(user),
        )
        assert declared.status_code == 201
        payload = declared.json()["declaration"]
        assert payload["id"] == "decl-0001"
        assert payload["user_team_id"] == "team-b"
        assert payload["verified"] is False
        verified = fresh_client.post(
            "/integrations/decl-0001/verify", headers=auth(ref)
        )
        assert verified.status_code == 200
        assert verified.json()["declaration"]["verified"] is True

    def test_unknown_scope_is_404(self, fresh_client):
        dev = register(fresh_client, "team-a")
        user = register(fresh_client, "team-b")
        upload(fresh_client, dev, "mod-a", ["team-a"])
        resp = fresh_client.post(
            "/integrations",
            json={
                "module_id": "mod-a",
                "league_id": "IRL",
                "task_id": "task-board",
                "milestone_id": "MS99",
            },
            headers=auth(user),
        )
        assert resp.status_code == 404
        assert resp.json()["error"]["type"] == "UnknownScope"


class TestDemoEventService:
    def test_upload_after_freeze_is_409(self, demo_client):
        resp = demo_client.post(
            "/modules",
            json={
                "id": "mod-late",
                "name": "Late Module",
                "category": "other",
                "developer_team_ids": ["tum-mirmi"],
            },
            headers=auth("demo-team-tum-mirmi"),
        )
        assert resp.status_code == 409
        assert resp.json()["error"]["type"] == "FrozenMarketplace"

    def test_leaderboard_matches_offline_recompute(self, demo_client, demo_dir):
        offline = CompetitionEvent(
            bundled_rulebook(), EventLedger(demo_dir / LEDGER_FILENAME)
        )
        for league in ("IRL", "SRL", "ORL"):
            resp = demo_client.get(f"/leaderboard/{league}")
            assert resp.status_code == 200
            assert resp.json()["rows"] == leaderboard_payload(offline.leaderboard(league))

    def test_unknown_league_is_404(self, demo_client):
        assert demo_client.get("/leaderboard/XRL").status_code == 404

    def test_developer_royalty_feed(self, demo_client):
        resp = demo_client.get("/teams/dlr/royalties")
        assert resp.status_code == 200
        body = resp.json()
        assert body["total"]["decimal"] == "1200.00"
        (entry,) = body["entries"]
        assert entry["user_team_id"] == "inria"
        assert entry["module_id"] == "mod-002"
        assert entry["amount"]["numerator"] == 1200

    def test_attempt_score_readback(self, demo_client):
        resp = demo_client.get("/attempts/att-0001/score")
        assert resp.status_code == 200
        body = resp.json()
        assert body["score"]["team_id"] == "tum-mirmi"
        assert body["score"]["task_points"]["decimal"] == "2310.00"
        assert body["session"]["state"] == "closed"
        assert demo_client.get("/attempts/att-9999/score").status_code == 404

    def test_team_token_cannot_record_outcomes(self, demo_client):
        resp = demo_client.post(
            "/attempts/att-0001/outcomes",
            json={"milestone_id": "MS1", "success": True, "level": "whatever"},
            headers=auth("demo-team-inria"),
        )
        assert resp.status_code == 403

    def test_closed_attempt_rejects_outcomes(self, demo_client):
        resp = demo_client.post(
            "/attempts/att-0001/outcomes",
            json={
                "milestone_id": "MS1",
                "success": True,
                "level": "The robot manipulator is fully autonomous and the task board is left unchanged",
            },
            headers=auth("demo-referee-irl"),
        )
        assert resp.status_code == 409
        assert resp.json()["error"]["type"] == "SessionClosed"

    def test_attempt_lifecycle_with_evaluator_override(self, demo_client):
        ref = auth("demo-referee-irl")
        opened = demo_client.post(
            "/attempts",
            json={
                "team_id": "tecnalia",
                "task_id": "task-board",
                "task_level": "Task board randomly positioned within the table",
            },
            headers=ref,
        )
        assert opened.status_code == 201, opened.text
        session_id = opened.json()["session"]["id"]
        recorded = demo_client.post(
            f"/attempts/{session_id}/outcomes",
            json={
                "milestone_id": "MS1",
                "success": True,
                "level": "The robot manipulator is fully autonomous and the task board is left unchanged",
                "subjective_score": 3,
            },
            headers=ref,
        )
        assert recorded.status_code == 200
        adjusted = demo_client.post(
            f"/attempts/{session_id}/outcomes",
            json={"milestone_id": "MS1", "subjective_score": 7},
            headers=auth("demo-evaluator-1"),
        )
        assert adjusted.status_code == 200
        (result,) = adjusted.json()["session"]["results"]
        assert result["subjective_score"]["decimal"] == "7.00"
        closed = demo_client.post(f"/attempts/{session_id}/close", headers=ref)
        assert closed.status_code == 200
        assert closed.json()["score"]["task_points"]["decimal"] == "114.00"

    def test_attempt_limit_maps_to_409(self, demo_client):
        ref = auth("demo-referee-irl")
        body = {
            "team_id": "tecnalia",
            "task_id": "task-board",
            "task_level": "Task board randomly positioned within the table",
        }
        third = demo_client.post("/attempts", json=body, headers=ref)
        assert third.status_code == 201
        fourth = demo_client.post("/attempts", json=body, headers=ref)
        assert fourth.status_code == 409
        assert fourth.json()["error"]["type"] == "AttemptLimitExceeded"

    def test_outcome_body_needs_success_or_score(self, demo_client):
        resp = demo_client.post(
            "/attempts/att-0001/outcomes",
            json={"milestone_id": "MS1"},
            headers=auth("demo-referee-irl"),
        )
        assert resp.status_code == 400


class TestAnalyticsEndpoints:
    def test_graph_phases(self, demo_client):
        pre = demo_client.get("/graph", params={"phase": "pre_event"})
        post = demo_client.get("/graph", params={"phase": "post_event"})
        assert pre.status_code == post.status_code == 200
        assert import_graph(pre.json()["graph"]).component_count() == 2
        assert import_graph(post.json()["graph"]).component_count() == 1

    def test_graph_dot_output(self, demo_client):
        resp = demo_client.get("/graph", params={"format": "dot"})
        assert resp.status_code == 200
        assert resp.headers["content-type"].startswith("text/vnd.graphviz")
        assert resp.text.startswith("digraph transfers")

    def test_graph_rejects_unknown_format_and_phase(self, demo_client):
        assert demo_client.get("/graph", params={"format": "yaml"}).status_code == 400
        assert demo_client.get("/graph", params={"phase": "mid"}).status_code == 400

    def test_stats_counts(self, demo_client):
        stats = demo_client.get("/stats").json()["stats"]
        assert stats["modules_total"] == 90
        assert stats["uploads_per_window"] == {"w1": 24, "w2": 32, "w3": 34}
        assert stats["connected_components"] == {"pre_event": 2, "post_event": 1}
        assert stats["marketplace"]["frozen"] is True
        assert stats["marketplace"]["frozen_at"] == "2024-11-18T09:00:00Z"

    def test_command_generation_is_referee_gated(self, demo_client):
        body = {
            "league_id": "SRL",
            "task_number": 2,
            "base_kitchen": "INRIA",
            "seed": 7,
        }
        denied = demo_client.post(
            "/commands/generate", json=body, headers=auth("demo-team-inria")
        )
        assert denied.status_code == 403
        first = demo_client.post(
            "/commands/generate", json=body, headers=auth("demo-referee-srl")
        )
        again = demo_client.post(
            "/commands/generate", json=body, headers=auth("demo-referee-srl")
        )
        assert first.status_code == 200
        assert first.json()["command"] == again.json()["command"]
        assert first.json()["command"]["text"].startswith("Pick the ")

    def test_command_generation_rejects_irl(self, demo_client):
        resp = demo_client.post(
            "/commands/generate",
            json={"league_id": "IRL"},
            headers=auth("demo-referee-irl"),
        )
        assert resp.status_code == 400

    def test_srl_generation_needs_base_kitchen(self, demo_client):
        resp = demo_client.post(
            "/commands/generate",
            json={"league_id": "SRL", "seed": 1},
            headers=auth("demo-referee-srl"),
        )
        assert resp.status_code == 400


class TestRestart:
    def test_state_survives_restart_and_snapshot_is_written(self, demo_config, demo_dir):
        with TestClient(create_app(demo_config)) as client:
            register(client, "latecomer", league="ORL")
            before = client.get("/leaderboard/SRL").json()
        assert (demo_dir / SNAPSHOT_FILENAME).exists()
        with TestClient(create_app(demo_config)) as client:
            teams = {t["id"] for t in client.get("/teams").json()["teams"]}
            assert "latecomer" in teams
            assert client.get("/leaderboard/SRL").json() == before
