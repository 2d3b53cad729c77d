"""HTTP/websocket surface of the gateway.

Robot traffic: websocket /robot?robot=<id>&mode=<ros|raw>. Console traffic:
the /api control endpoints plus the /api/events stream. Non-ROS ingestion:
/streams. All handlers are async so state access stays loop-confined.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Request, Response, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from smartcloud import protocol
from smartcloud.apps.images import ImageError, JPEG_MAGIC, decode_base64_image, decode_jpeg
from smartcloud.apps.runtime import DetectorApp, MapSpec
from smartcloud.gateway.state import (
    AlreadyStopped,
    AppInitFailure,
    DuplicateRobotId,
    GatewayState,
    InstanceStatus,
    MissingTopic,
    UnknownInstance,
    UnknownPackage,
    UnknownRobot,
)
from smartcloud.webservice import XML_CONTENT_TYPE, UnknownStream

logger = logging.getLogger(__name__)

WS_POLICY_VIOLATION = 1008


def create_server(state: GatewayState, ui_dir: "str | Path | None" = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        state.loop = asyncio.get_running_loop()
        yield

    app = FastAPI(title="smartcloud gateway", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.gateway = state

    # ---- robot websocket ------------------------------------------------

    @app.websocket("/robot")
    async def robot_socket(ws: WebSocket) -> None:
        await ws.accept()
        robot_id = ws.query_params.get("robot", "")
        mode_name = ws.query_params.get("mode", "ros")
        display_name = ws.query_params.get("name", "")
        try:
            mode = protocol.SessionMode(mode_name)
        except ValueError:
            await ws.close(code=WS_POLICY_VIOLATION, reason=f"unknown mode {mode_name!r}")
            return
        try:
            record = state.accept_robot(robot_id, mode, ws.send_text, display_name)
        except DuplicateRobotId:
            await ws.close(code=WS_POLICY_VIOLATION, reason="duplicate robot id")
            return
        except Exception as exc:
            await ws.close(code=WS_POLICY_VIOLATION, reason=str(exc))
            return
        try:
            while True:
                text = await ws.receive_text()
                await state.handle_frame(record, text)
        except WebSocketDisconnect:
            pass
        finally:
            await state.drop_robot(robot_id)

    # ---- console event stream -------------------------------------------

    @app.websocket("/api/events")
    async def event_socket(ws: WebSocket) -> None:
        await ws.accept()
        queue = state.events.subscribe()
        try:
            while True:
                event = await queue.get()
                await ws.send_text(json.dumps(event, sort_keys=True))
        except WebSocketDisconnect:
            pass
        finally:
            state.events.unsubscribe(queue)

    # ---- control API ------------------------------------------------------

    @app.get("/api/robots")
    async def list_robots() -> dict:
        return {"robots": state.robot_view()}

    @app.get("/api/robots/{robot_id}/packages")
    async def robot_packages(robot_id: str) -> Response:
        try:
            return JSONResponse(state.packages_view(robot_id))
        except UnknownRobot:
            return JSONResponse({"error": f"unknown robot {robot_id}"}, status_code=404)

    @app.get("/api/offloads")
    async def list_offloads() -> dict:
        return {"instances": state.instances_view()}

    @app.post("/api/offloads")
    async def start_offload(request: Request) -> Response:
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return JSONResponse({"error": "body must be JSON"}, status_code=400)
        if not isinstance(body, dict) or "robot" not in body or "package" not in body:
            return JSONResponse({"error": "need robot and package fields"}, status_code=400)
        bindings = body.get("bindings")
        map_spec = None
        if "map" in body:
            try:
                map_spec = MapSpec.from_wire(body["map"])
            except (TypeError, ValueError, KeyError) as exc:
                return JSONResponse({"error": f"bad map spec: {exc}"}, status_code=400)
        try:
            inst = await state.start_offload(
                str(body["robot"]), str(body["package"]), bindings, map_spec
            )
        except (UnknownRobot, UnknownPackage) as exc:
            return JSONResponse({"error": str(exc)}, status_code=404)
        except (MissingTopic, AppInitFailure) as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        return JSONResponse({"instance": inst.instance_id, "status": inst.status.value})

    @app.delete("/api/offloads/{instance_id}")
    async def stop_offload(instance_id: str) -> Response:
        try:
            snapshot = await state.stop_offload(instance_id)
        except UnknownInstance as exc:
            return JSONResponse({"error": str(exc)}, status_code=404)
        except AlreadyStopped as exc:
            return JSONResponse({"error": f"already stopped: {exc}"}, status_code=409)
        return JSONResponse(snapshot)

    @app.get("/api/metrics")
    async def metrics() -> dict:
        return state.metrics_view()

    # ---- web-service (non-ROS) path ---------------------------------------

    def _find_stream_detector(stream_id: str) -> "DetectorApp | None":
        for inst in state.instances.values():
            if (
                inst.stream_id == stream_id
                and inst.status is InstanceStatus.RUNNING
                and isinstance(inst.app, DetectorApp)
            ):
                return inst.app
        return None

    def _stream_instance(stream_id: str):
        for inst in state.instances.values():
            if inst.stream_id == stream_id and inst.status is InstanceStatus.RUNNING:
                return inst
        return None

    @app.post("/streams/{stream_id}/frames")
    async def ingest_frame(stream_id: str, request: Request) -> Response:
        t0 = time.perf_counter_ns()
        inst = _stream_instance(stream_id)
        if inst is None or not isinstance(inst.app, DetectorApp) or not state.results.has(stream_id):
            return JSONResponse({"error": f"unknown stream {stream_id}"}, status_code=404)
        body = await request.body()
        try:
            if body.startswith(JPEG_MAGIC):
                image = decode_jpeg(body)
            else:
                image = decode_base64_image(body.decode("ascii", errors="strict"))
        except (ImageError, UnicodeDecodeError) as exc:
            return JSONResponse({"error": f"undecodable frame: {exc}"}, status_code=400)
        reference_id = request.headers.get("X-Reference-Id", "")
        results = inst.app.classify(image)
        report = state.results.push(stream_id, results, reference_id)
        t1 = time.perf_counter_ns()
        state.latency.record_rtt(t0, t1, processing_ns=t1 - t0)
        # store already updated; this records the output and emits the event
        await state.publish_result(inst.instance_id, inst.app.channel, report.to_wire())
        return JSONResponse(
            {"stream": stream_id, "message_id": report.message_id,
             "reference_id": report.reference_id}
        )

    @app.get("/streams/{stream_id}/latest")
    async def latest_result(stream_id: str) -> Response:
        try:
            xml = state.results.latest_xml(stream_id)
        except UnknownStream:
            return JSONResponse({"error": f"unknown stream {stream_id}"}, status_code=404)
        return Response(content=xml, media_type=XML_CONTENT_TYPE)

    # ---- console static files ---------------------------------------------

    if ui_dir is not None:
        ui_path = Path(ui_dir)
        if ui_path.is_dir():
            app.mount("/ui", StaticFiles(directory=str(ui_path), html=True), name="ui")
        else:
            logger.warning("ui directory %s not found; /ui disabled", ui_path)

    return app
