"""The webhook HTTP endpoint and the long-running service process.

POST /webhook verifies the HMAC signature over the raw body, normalizes the
payload, and enqueues the event; the response is sent before any game logic
runs. GET /healthz reports liveness. Shutdown (signal or programmatic)
stops accepting deliveries, then drains everything already enqueued.
"""

from __future__ import annotations

import json
import logging
import os
import signal
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import __version__
from .gateway import HttpHostingClient, MalformedPayload, normalize_event, verify_signature
from .service import (
    ConfigError,
    EventDispatcher,
    OssDoorwayService,
    ServiceConfig,
    load_configured_catalog,
)
from .simulated import SimulatedHost
from .store import FileProgressStore

log = logging.getLogger("ossdoorway.server")


class WebhookServer:
    """HTTP front end bound to a dispatcher. ``port`` may be 0 for tests."""

    def __init__(self, host: str, port: int, secret: bytes, dispatcher: EventDispatcher):
        self.secret = secret
        self.dispatcher = dispatcher
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt: str, *args) -> None:
                log.debug("http: " + fmt, *args)

            def _reply(self, status: int, body: bytes = b"") -> None:
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                if body:
                    self.wfile.write(body)

            def do_GET(self) -> None:
                if self.path == "/healthz":
                    payload = json.dumps({"status": "ok", "version": __version__})
                    self._reply(200, payload.encode("utf-8"))
                else:
                    self._reply(404)

            def do_POST(self) -> None:
                if self.path != "/webhook":
                    self._reply(404)
                    return
                length = int(self.headers.get("Content-Length", 0))
                body = self.rfile.read(length) if length else b""
                signature = self.headers.get("X-Hub-Signature-256", "")
                if not verify_signature(outer.secret, body, signature):
                    self._reply(401)
                    return
                event_name = self.headers.get("X-GitHub-Event")
                delivery_id = self.headers.get("X-GitHub-Delivery")
                if not event_name or not delivery_id:
                    self._reply(400)
                    return
                try:
                    payload = json.loads(body)
                except json.JSONDecodeError:
                    self._reply(400)
                    return
                if not isinstance(payload, dict):
                    self._reply(400)
                    return
                try:
                    event = normalize_event(event_name, delivery_id, payload)
                except MalformedPayload:
                    self._reply(400)
                    return
                if event is not None:
                    outer.dispatcher.submit(event)
                self._reply(204)

        self._httpd = ThreadingHTTPServer((host, port), Handler)
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, name="ossdoorway-http", daemon=True
        )
        self._thread.start()

    def shutdown(self) -> None:
        """Stop accepting requests, then drain the queued events."""
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join()
        self.dispatcher.drain()


def build_service(config: ServiceConfig) -> OssDoorwayService:
    catalog = load_configured_catalog(config)
    store = FileProgressStore(config.data_dir, catalog)
    if config.hosting_mode == "live":
        token = os.environ.get(config.hosting_token_env)
        if not token:
            raise ConfigError(
                f"hosting token environment variable {config.hosting_token_env} is not set"
            )
        client = HttpHostingClient(config.hosting_base_url, token)
    else:
        client = SimulatedHost()
    return OssDoorwayService(catalog, store, client)


def run_server(config: ServiceConfig) -> None:
    """Serve until SIGTERM/SIGINT; drains in-flight events before returning."""
    secret = os.environ.get(config.webhook_secret_env)
    if not secret:
        raise ConfigError(
            f"webhook secret environment variable {config.webhook_secret_env} is not set"
        )
    service = build_service(config)
    dispatcher = EventDispatcher(service)
    server = WebhookServer(config.host, config.port, secret.encode("utf-8"), dispatcher)

    stop = threading.Event()

    def _on_signal(signum, frame) -> None:
        log.info("signal %s received; draining", signum)
        stop.set()

    signal.signal(signal.SIGTERM, _on_signal)
    signal.signal(signal.SIGINT, _on_signal)

    server.start()
    log.info("listening on %s:%s", config.host, server.port)
    stop.wait()
    server.shutdown()
    log.info("drained %d events; bye", dispatcher.processed)
