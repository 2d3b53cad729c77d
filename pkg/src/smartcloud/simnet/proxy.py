"""Delay-injecting TCP proxy: the stand-in for the wide-area link.

Every connection gets an independent pair of one-way pipes. Each chunk read
off one side is scheduled for delivery one-way-delay (+ jitter draw) later
and written in arrival order, so per-connection ordering always holds, even
when a later chunk draws a smaller delay.

Drops remove whole chunks. On a stream protocol that corrupts the byte
stream, which is the point: it models an unreliable link for loss tests. The
latency experiments all run with drop = 0.
"""

from __future__ import annotations

import asyncio
import logging
import random
import threading
from dataclasses import dataclass

logger = logging.getLogger(__name__)

CHUNK = 65536


class ProxyError(Exception):
    pass


class UpstreamUnreachable(ProxyError):
    pass


@dataclass(frozen=True)
class ProxyConfig:
    """one_way_ms applies per direction, so RTT = 2 x one_way_ms + transport."""

    one_way_ms: float = 16.0
    jitter_ms: float = 0.0
    drop: float = 0.0

    def __post_init__(self) -> None:
        if self.one_way_ms < 0 or self.jitter_ms < 0:
            raise ProxyError("delays must be >= 0")
        if not 0.0 <= self.drop < 1.0:
            raise ProxyError(f"drop probability must be in [0, 1), got {self.drop}")


class DelayProxy:
    """TCP forwarder with per-direction delay queues, run on its own thread."""

    def __init__(
        self,
        upstream: tuple[str, int],
        config: ProxyConfig | None = None,
        listen_host: str = "127.0.0.1",
        listen_port: int = 0,
        seed: int | None = None,
    ) -> None:
        self.upstream = upstream
        self.config = config or ProxyConfig()
        self.listen_host = listen_host
        self.listen_port = listen_port
        self._rng = random.Random(seed)
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._server: asyncio.AbstractServer | None = None
        self._conn_tasks: set[asyncio.Task] = set()
        self._ready = threading.Event()

    @property
    def port(self) -> int:
        return self.listen_port

    @property
    def address(self) -> tuple[str, int]:
        return (self.listen_host, self.listen_port)

    def start(self, probe: bool = False) -> "DelayProxy":
        if probe:
            self._probe_upstream()
        self._thread = threading.Thread(target=self._run, name="delay-proxy", daemon=True)
        self._thread.start()
        if not self._ready.wait(timeout=10.0):
            raise ProxyError("proxy failed to start listening")
        return self

    def stop(self) -> None:
        loop, self._loop = self._loop, None
        if loop is None:
            return
        asyncio.run_coroutine_threadsafe(self._shutdown(), loop).result(timeout=10.0)
        loop.call_soon_threadsafe(loop.stop)
        if self._thread is not None:
            self._thread.join(timeout=10.0)

    def _probe_upstream(self) -> None:
        async def probe() -> None:
            try:
                _, writer = await asyncio.open_connection(*self.upstream)
            except OSError as exc:
                raise UpstreamUnreachable(f"{self.upstream[0]}:{self.upstream[1]}: {exc}") from exc
            writer.close()
            await writer.wait_closed()

        asyncio.run(probe())

    def _run(self) -> None:
        loop = asyncio.new_event_loop()
        asyncio.set_event_loop(loop)
        self._loop = loop

        async def serve() -> None:
            self._server = await asyncio.start_server(
                self._handle_client, self.listen_host, self.listen_port
            )
            self.listen_port = self._server.sockets[0].getsockname()[1]
            self._ready.set()

        loop.run_until_complete(serve())
        loop.run_forever()
        # drain cancellations scheduled by _shutdown
        pending = [t for t in asyncio.all_tasks(loop) if not t.done()]
        for task in pending:
            task.cancel()
        if pending:
            loop.run_until_complete(asyncio.gather(*pending, return_exceptions=True))
        loop.close()

    async def _shutdown(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        for task in list(self._conn_tasks):
            task.cancel()

    async def _handle_client(
        self, client_reader: asyncio.StreamReader, client_writer: asyncio.StreamWriter
    ) -> None:
        task = asyncio.current_task()
        assert task is not None
        self._conn_tasks.add(task)
        try:
            try:
                up_reader, up_writer = await asyncio.open_connection(*self.upstream)
            except OSError as exc:
                logger.warning("upstream %s unreachable: %s", self.upstream, exc)
                client_writer.close()
                return
            pumps = [
                asyncio.create_task(self._pump(client_reader, up_writer)),
                asyncio.create_task(self._pump(up_reader, client_writer)),
            ]
            try:
                await asyncio.gather(*pumps)
            finally:
                for p in pumps:
                    p.cancel()
                for w in (client_writer, up_writer):
                    w.close()
        except asyncio.CancelledError:
            pass
        finally:
            self._conn_tasks.discard(task)

    async def _pump(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        """One direction: read, schedule, deliver in order."""
        loop = asyncio.get_running_loop()
        queue: asyncio.Queue = asyncio.Queue()

        async def deliver() -> None:
            while True:
                item = await queue.get()
                if item is None:
                    break
                deliver_at, chunk = item
                wait = deliver_at - loop.time()
                if wait > 0:
                    await asyncio.sleep(wait)
                writer.write(chunk)
                await writer.drain()
            if writer.can_write_eof():
                try:
                    writer.write_eof()
                except OSError:
                    pass

        sink = asyncio.create_task(deliver())
        cfg = self.config
        try:
            while True:
                try:
                    chunk = await reader.read(CHUNK)
                except (ConnectionResetError, BrokenPipeError):
                    break
                if not chunk:
                    break
                if cfg.drop > 0.0 and self._rng.random() < cfg.drop:
                    continue
                delay_ms = cfg.one_way_ms
                if cfg.jitter_ms > 0.0:
                    delay_ms = self._rng.gauss(cfg.one_way_ms, cfg.jitter_ms)
                delay = max(0.0, delay_ms) / 1000.0
                await queue.put((loop.time() + delay, chunk))
        finally:
            await queue.put(None)
            try:
                await sink
            except (ConnectionResetError, BrokenPipeError, OSError):
                pass


def run_proxy(
    upstream: tuple[str, int],
    config: ProxyConfig | None = None,
    listen_host: str = "127.0.0.1",
    listen_port: int = 0,
    seed: int | None = None,
    probe: bool = True,
) -> DelayProxy:
    """Start a forwarding service; UpstreamUnreachable if the probe fails."""
    proxy = DelayProxy(upstream, config, listen_host, listen_port, seed=seed)
    return proxy.start(probe=probe)
