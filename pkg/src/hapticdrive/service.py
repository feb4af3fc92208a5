"""Live-drive WebSocket service.

One session per connection. The server sends versioned JSON text frames:
a ``hello`` frame on connect (protocol version, config echo, track
geometry), then one ``state`` frame per 50-Hz tick. The client sends
``input`` frames (intent angles or raw torques), ``method`` switches, and
``reset``. Malformed client frames produce an ``error`` frame and the
session continues.

Two pacing modes: ``wall`` advances ticks on a wall-clock schedule using
the latest received input (human driving); ``lockstep`` advances exactly
one tick per received input frame (deterministic scripted clients).
Frame fields and units are documented in docs/protocol.md.
"""

from __future__ import annotations

import asyncio
import json
import math

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import SessionConfig, session_config_from_dict, session_config_to_dict
from .constants import TICK_DT
from .session import ExternalInput, Session
from .skillnet import SkillNet
from .track import midline_polyline

PROTOCOL_VERSION = 1


def _track_geometry(session: Session) -> dict:
    path = session.path
    pts = midline_polyline(path, spacing=2.0)
    return {
        "total_length": path.total_length,
        "lane_width": path.lane_width,
        "offset_right_edge": path.offset_right_edge,
        "offset_left_edge": path.offset_left_edge,
        "midline": [[round(float(x), 3), round(float(y), 3)] for x, y in pts],
    }


def _hello_frame(session: Session, pacing: str) -> dict:
    return {
        "type": "hello",
        "protocol_version": PROTOCOL_VERSION,
        "pacing": pacing,
        "tick_dt": TICK_DT,
        "config": session_config_to_dict(session.cfg),
        "track": _track_geometry(session),
    }


def _state_frame(frame: dict) -> dict:
    out = {"type": "state"}
    out.update(frame)
    return out


def _parse_input(msg: dict) -> ExternalInput:
    def num(key, default=0.0):
        v = msg.get(key, default)
        if not isinstance(v, (int, float)) or not math.isfinite(float(v)):
            raise ValueError(f"field {key} must be a finite number")
        return float(v)
    return ExternalInput(
        steer_intent=num("steer_intent"),
        accel_intent=num("accel_intent"),
        brake_intent=num("brake_intent"),
        raw_torque=bool(msg.get("raw_torque", False)),
        steer_torque=num("steer_torque"),
        accel_torque=num("accel_torque"),
        brake_torque=num("brake_torque"),
    )


class DriveService:
    """Holds the defaults a connection starts from."""

    def __init__(self, cfg: SessionConfig,
                 net_s: SkillNet | None = None,
                 net_a: SkillNet | None = None,
                 pacing: str = "wall"):
        if pacing not in ("wall", "lockstep"):
            raise ValueError("pacing must be 'wall' or 'lockstep'")
        self.cfg = cfg
        self.net_s = net_s
        self.net_a = net_a
        self.pacing = pacing

    def new_session(self, cfg: SessionConfig | None = None) -> Session:
        return Session(cfg or self.cfg, net_s=self.net_s, net_a=self.net_a)


def create_app(service: DriveService) -> FastAPI:
    app = FastAPI(title="hapticdrive service")
    app.state.service = service

    @app.websocket("/drive")
    async def drive(ws: WebSocket):
        await ws.accept()
        session = service.new_session()
        await ws.send_text(json.dumps(_hello_frame(session, service.pacing)))
        latest = ExternalInput()
        try:
            if service.pacing == "lockstep":
                await _lockstep_loop(ws, service, session)
            else:
                await _wall_loop(ws, service, session, latest)
        except WebSocketDisconnect:
            pass  # dropped client ends its session cleanly

    async def _error(ws: WebSocket, message: str):
        await ws.send_text(json.dumps({"type": "error", "message": message}))

    async def _handle_control(ws: WebSocket, service: DriveService,
                              session: Session, msg: dict) -> Session:
        kind = msg.get("type")
        if kind == "method":
            method = msg.get("method")
            if method not in ("N", "G", "C"):
                await _error(ws, f"unknown method {method!r}")
            else:
                session.set_method(method)
        elif kind == "reset":
            try:
                cfg = (session_config_from_dict(msg["config"])
                       if "config" in msg else service.cfg)
                session = service.new_session(cfg)
                await ws.send_text(json.dumps(_hello_frame(session, service.pacing)))
            except Exception as exc:
                await _error(ws, f"bad reset config: {exc}")
        else:
            await _error(ws, f"unknown frame type {kind!r}")
        return session

    async def _lockstep_loop(ws: WebSocket, service: DriveService,
                             session: Session):
        while True:
            raw = await ws.receive_text()
            try:
                msg = json.loads(raw)
                if not isinstance(msg, dict):
                    raise ValueError("frame must be a JSON object")
            except ValueError as exc:
                await _error(ws, f"malformed frame: {exc}")
                continue
            if msg.get("type") == "input":
                try:
                    ext = _parse_input(msg)
                except ValueError as exc:
                    await _error(ws, f"malformed input: {exc}")
                    continue
                frame = session.tick(ext)
                await ws.send_text(json.dumps(_state_frame(frame)))
            else:
                session = await _handle_control(ws, service, session, msg)

    async def _wall_loop(ws: WebSocket, service: DriveService,
                         session: Session, latest: ExternalInput):
        loop = asyncio.get_event_loop()
        next_t = loop.time()

        async def pump_inputs():
            nonlocal session, latest
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                    if not isinstance(msg, dict):
                        raise ValueError("frame must be a JSON object")
                except ValueError as exc:
                    await _error(ws, f"malformed frame: {exc}")
                    continue
                if msg.get("type") == "input":
                    try:
                        latest = _parse_input(msg)
                    except ValueError as exc:
                        await _error(ws, f"malformed input: {exc}")
                else:
                    session = await _handle_control(ws, service, session, msg)

        pump = asyncio.ensure_future(pump_inputs())
        try:
            while True:
                frame = session.tick(latest)
                await ws.send_text(json.dumps(_state_frame(frame)))
                next_t += TICK_DT
                delay = next_t - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    next_t = loop.time()  # fell behind; resynchronize
                if pump.done():
                    pump.result()
        finally:
            pump.cancel()

    return app


def serve(bind: str, cfg: SessionConfig, net_s=None, net_a=None,
          pacing: str = "wall") -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn
    host, _, port = bind.partition(":")
    app = create_app(DriveService(cfg, net_s, net_a, pacing))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8700),
                log_level="warning")
