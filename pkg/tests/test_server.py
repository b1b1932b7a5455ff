from __future__ import annotations

import hashlib
import hmac
import json

import pytest
import requests

from ossdoorway import __version__
from ossdoorway.gateway import README_PATH
from ossdoorway.server import WebhookServer, build_service, run_server
from ossdoorway.service import ConfigError, EventDispatcher, ServiceConfig

SECRET = b"test-secret"


def _sign(body: bytes) -> str:
    return "sha256=" + hmac.new(SECRET, body, hashlib.sha256).hexdigest()


@pytest.fixture
def live_server(service):
    dispatcher = EventDispatcher(service, workers=2)
    server = WebhookServer("127.0.0.1", 0, SECRET, dispatcher)
    server.start()
    yield server, service
    server.shutdown()


def _post(server: WebhookServer, event_name, delivery, payload, signature=None):
    body = json.dumps(payload).encode("utf-8")
    headers = {
        "X-GitHub-Event": event_name,
        "X-GitHub-Delivery": delivery,
        "X-Hub-Signature-256": signature if signature is not None else _sign(body),
    }
    return requests.post(
        f"http://127.0.0.1:{server.port}/webhook", data=body, headers=headers, timeout=5
    )


def _comment_payload(user, repo, number, body):
    return {
        "action": "created",
        "comment": {"body": body, "user": {"login": user}},
        "issue": {"number": number},
        "repository": {"full_name": repo},
        "sender": {"login": user},
    }


def test_healthz(live_server):
    server, _ = live_server
    response = requests.get(f"http://127.0.0.1:{server.port}/healthz", timeout=5)
    assert response.status_code == 200
    assert response.json()["version"] == __version__


def test_bad_signature_401(live_server):
    server, _ = live_server
    response = _post(server, "issue_comment", "d1", {"action": "created"}, "sha256=bad")
    assert response.status_code == 401


def test_missing_headers_400(live_server):
    server, _ = live_server
    body = b"{}"
    response = requests.post(
        f"http://127.0.0.1:{server.port}/webhook",
        data=body,
        headers={"X-Hub-Signature-256": _sign(body)},
        timeout=5,
    )
    assert response.status_code == 400


def test_invalid_json_400(live_server):
    server, _ = live_server
    body = b"not json"
    response = requests.post(
        f"http://127.0.0.1:{server.port}/webhook",
        data=body,
        headers={
            "X-GitHub-Event": "issue_comment",
            "X-GitHub-Delivery": "d1",
            "X-Hub-Signature-256": _sign(body),
        },
        timeout=5,
    )
    assert response.status_code == 400


def test_malformed_supported_payload_400(live_server):
    server, _ = live_server
    response = _post(server, "issue_comment", "d1", {"action": "created", "comment": {}})
    assert response.status_code == 400


def test_unsupported_event_acknowledged_204(live_server):
    server, _ = live_server
    response = _post(server, "watch", "d1", {"action": "started"})
    assert response.status_code == 204


def test_signed_delivery_processed_end_to_end(live_server, host):
    server, service = live_server
    repo = service.enroll("alice")
    payload = _comment_payload("alice", repo, 1, "the tracker is at /issues")
    response = _post(server, "issue_comment", "gh-001", payload)
    assert response.status_code == 204
    server.dispatcher.drain()
    assert service.store.load_progress("alice").xp == 10
    assert "` 8%" in host.repo(repo).files[README_PATH]


def test_shutdown_drains_queued_events(service, host):
    repo = service.enroll("alice")
    dispatcher = EventDispatcher(service, workers=2)
    server = WebhookServer("127.0.0.1", 0, SECRET, dispatcher)
    server.start()
    bodies = ["/issues", "/pulls", "/forks", "README", "/graphs/contributors"]
    for i, fragment in enumerate(bodies):
        payload = _comment_payload("alice", repo, 1, f"answer {fragment}")
        assert _post(server, "issue_comment", f"gh-{i}", payload).status_code == 204
    server.shutdown()  # what the signal handler invokes
    assert dispatcher.processed == 5
    assert service.store.load_progress("alice").xp == 65


def test_run_server_requires_secret(tmp_path, monkeypatch):
    monkeypatch.delenv("WEBHOOK_SECRET", raising=False)
    config = ServiceConfig(data_dir=str(tmp_path / "d"))
    with pytest.raises(ConfigError, match="WEBHOOK_SECRET"):
        run_server(config)


def test_build_service_live_requires_token(tmp_path, monkeypatch):
    monkeypatch.delenv("HOSTING_TOKEN", raising=False)
    config = ServiceConfig(data_dir=str(tmp_path / "d"), hosting_mode="live")
    with pytest.raises(ConfigError, match="HOSTING_TOKEN"):
        build_service(config)


def test_build_service_simulated(tmp_path):
    from ossdoorway.simulated import SimulatedHost

    config = ServiceConfig(data_dir=str(tmp_path / "d"))
    service = build_service(config)
    assert isinstance(service.client, SimulatedHost)
