"""Run the gateway on a background thread (tests, benches, scenarios)."""

from __future__ import annotations

import threading
import time

import uvicorn
from fastapi import FastAPI

from smartcloud.gateway.server import create_server
from smartcloud.gateway.state import GatewayState


class ServerStartError(Exception):
    pass


class ServerHandle:
    """A uvicorn server on its own thread, with port discovery for port 0."""

    def __init__(
        self,
        state: GatewayState | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
        app: FastAPI | None = None,
        log_level: str = "warning",
    ) -> None:
        self.state = state or GatewayState()
        self.host = host
        self.port = port
        self.app = app or create_server(self.state)
        self._config = uvicorn.Config(
            self.app, host=host, port=port, log_level=log_level, access_log=False
        )
        self._server = uvicorn.Server(self._config)
        self._thread: threading.Thread | None = None

    def start(self, timeout_s: float = 15.0) -> "ServerHandle":
        self._thread = threading.Thread(target=self._server.run, name="gateway", daemon=True)
        self._thread.start()
        deadline = time.monotonic() + timeout_s
        while not self._server.started:
            if time.monotonic() > deadline or not self._thread.is_alive():
                raise ServerStartError("gateway server failed to start")
            time.sleep(0.01)
        sockets = getattr(self._server, "servers", [])
        if sockets and sockets[0].sockets:
            self.port = sockets[0].sockets[0].getsockname()[1]
        return self

    def stop(self) -> None:
        self._server.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout=15.0)

    @property
    def address(self) -> str:
        return f"{self.host}:{self.port}"

    @property
    def http_base(self) -> str:
        return f"http://{self.host}:{self.port}"

    @property
    def ws_base(self) -> str:
        return f"ws://{self.host}:{self.port}"

    def __enter__(self) -> "ServerHandle":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
