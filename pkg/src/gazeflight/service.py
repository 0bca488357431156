"""HTTP control endpoints and the WebSocket push channel for a SessionHub.

Routes (one port):
  GET  /status            session status + counters
  POST /control/start     begin a session (409 if already running)
  POST /control/stop      finalize the recording (409 if not running)
  POST /control/annotate  body {"text": ...} (409 if not running)
  GET  /aoi               current AOI model (config-format JSON)
  PUT  /aoi               replace the model; 409 while running, 422 invalid
  WS   /ws                event stream: status / gaze / metrics / annotation
"""

from __future__ import annotations

import asyncio
import json
import threading
from pathlib import Path
from typing import Optional

import uvicorn
from fastapi import FastAPI, Request, Response, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .model import AoiConfigError, dump_aoi_model, load_aoi_model
from .stream import SessionHub

#: Idle subscribers get a keepalive so dead connections are noticed.
PING_IDLE_S = 5.0


def build_app(hub: SessionHub, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="gazeflight evaluator backend")

    @app.get("/status")
    def status() -> dict:
        return hub.status_payload()

    @app.post("/control/start")
    def start() -> JSONResponse:
        try:
            return JSONResponse(hub.start())
        except RuntimeError as e:
            return JSONResponse({"error": str(e)}, status_code=409)

    @app.post("/control/stop")
    def stop() -> JSONResponse:
        try:
            return JSONResponse(hub.stop())
        except RuntimeError as e:
            return JSONResponse({"error": str(e)}, status_code=409)

    @app.post("/control/annotate")
    async def annotate(request: Request) -> JSONResponse:
        body = await request.json()
        text = body.get("text")
        if not isinstance(text, str) or not text:
            return JSONResponse({"error": "annotate needs a non-empty text"},
                                status_code=422)
        try:
            return JSONResponse(hub.annotate(text))
        except RuntimeError as e:
            return JSONResponse({"error": str(e)}, status_code=409)

    @app.get("/aoi")
    def get_aoi() -> Response:
        return Response(dump_aoi_model(hub.get_model()),
                        media_type="application/json")

    @app.put("/aoi")
    async def put_aoi(request: Request) -> JSONResponse:
        body = await request.body()
        try:
            model = load_aoi_model(body.decode("utf-8"))
        except AoiConfigError as e:
            return JSONResponse({"error": str(e)}, status_code=422)
        try:
            hub.set_model(model)
        except RuntimeError as e:
            return JSONResponse({"error": str(e)}, status_code=409)
        return JSONResponse({"ok": True})

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        sub = hub.subscribe()
        loop = asyncio.get_running_loop()
        idle = 0.0
        try:
            while True:
                events = await loop.run_in_executor(None, sub.drain, 0.25)
                if events:
                    idle = 0.0
                    for event in events:
                        await ws.send_text(json.dumps(event))
                else:
                    idle += 0.25
                    if idle >= PING_IDLE_S:
                        idle = 0.0
                        await ws.send_text(json.dumps({"type": "ping"}))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            hub.unsubscribe(sub)

    if ui_dir:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


class ServiceHandle:
    """A uvicorn server running in a daemon thread."""

    def __init__(self, app: FastAPI, host: str, port: int):
        config = uvicorn.Config(app, host=host, port=port, log_level="warning",
                                ws_ping_interval=None, ws_ping_timeout=None)
        self.server = uvicorn.Server(config)
        self.host = host
        self.port = port
        self._thread = threading.Thread(target=self.server.run, daemon=True)

    def start(self, wait_ready_s: float = 10.0) -> None:
        self._thread.start()
        import time
        deadline = time.monotonic() + wait_ready_s
        while not self.server.started:
            if time.monotonic() > deadline or not self._thread.is_alive():
                raise RuntimeError(f"service failed to start on {self.host}:{self.port}")
            time.sleep(0.02)

    def stop(self, timeout: float = 5.0) -> None:
        self.server.should_exit = True
        self._thread.join(timeout)


def serve_hub(hub: SessionHub, host: str, port: int,
              ui_dir: Optional[str] = None) -> ServiceHandle:
    handle = ServiceHandle(build_app(hub, ui_dir=ui_dir), host, port)
    handle.start()
    return handle
