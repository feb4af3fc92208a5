"""WebSocket service: protocol, lockstep equivalence, robustness, cadence."""

import dataclasses
import json
import time

import numpy as np
import pytest
from starlette.testclient import TestClient

from hapticdrive.agents import EXPERT_PRESET, DriverAgent
from hapticdrive.config import DriverSpec, PathSpec, SessionConfig
from hapticdrive.plant import VehicleState
from hapticdrive.runlog import dump_csv
from hapticdrive.service import DriveService, create_app
from hapticdrive.session import run_session
from hapticdrive.track import build_training_path

QUIET = dataclasses.replace(EXPERT_PRESET, noise_sigma_steer=0.0,
                            noise_sigma_accel=0.0)


def _external_cfg(cap=8.0, method="N"):
    return SessionConfig(path=PathSpec(kind="training", sweep_deg=45.0),
                         method=method,
                         driver=DriverSpec(kind="external"),
                         duration_cap=cap)


def _lockstep_client(cfg):
    return TestClient(create_app(DriveService(cfg, pacing="lockstep")))


def test_hello_frame_contents():
    with _lockstep_client(_external_cfg()) as client:
        with client.websocket_connect("/drive") as ws:
            hello = json.loads(ws.receive_text())
    assert hello["type"] == "hello"
    assert hello["protocol_version"] == 1
    assert hello["tick_dt"] == pytest.approx(0.02)
    assert hello["config"]["method"] == "N"
    assert hello["track"]["lane_width"] == 3.5
    assert len(hello["track"]["midline"]) > 100


def test_lockstep_state_frames_and_method_switch():
    with _lockstep_client(_external_cfg()) as client:
        with client.websocket_connect("/drive") as ws:
            ws.receive_text()  # hello
            ws.send_text(json.dumps({"type": "input", "accel_intent": 5.0}))
            frame = json.loads(ws.receive_text())
            assert frame["type"] == "state"
            assert frame["tick"] == 0
            assert frame["method"] == "N"
            assert frame["tq_assist_s"] == 0.0
            ws.send_text(json.dumps({"type": "method", "method": "C"}))
            ws.send_text(json.dumps({"type": "input", "accel_intent": 5.0}))
            frame = json.loads(ws.receive_text())
            assert frame["method"] == "C"  # visible within one state frame
            assert frame["tick"] == 1


def test_malformed_frames_keep_session_alive():
    with _lockstep_client(_external_cfg()) as client:
        with client.websocket_connect("/drive") as ws:
            ws.receive_text()
            ws.send_text("this is not json")
            err = json.loads(ws.receive_text())
            assert err["type"] == "error"
            ws.send_text(json.dumps({"type": "input", "steer_intent": "NaN"}))
            err = json.loads(ws.receive_text())
            assert err["type"] == "error"
            ws.send_text(json.dumps({"type": "mystery"}))
            err = json.loads(ws.receive_text())
            assert err["type"] == "error"
            ws.send_text(json.dumps({"type": "input"}))
            frame = json.loads(ws.receive_text())
            assert frame["type"] == "state"  # still running


def test_reset_replaces_session():
    with _lockstep_client(_external_cfg()) as client:
        with client.websocket_connect("/drive") as ws:
            ws.receive_text()
            ws.send_text(json.dumps({"type": "input", "accel_intent": 8.0}))
            ws.receive_text()
            ws.send_text(json.dumps({"type": "reset"}))
            hello = json.loads(ws.receive_text())
            assert hello["type"] == "hello"
            ws.send_text(json.dumps({"type": "input"}))
            frame = json.loads(ws.receive_text())
            assert frame["tick"] == 0


def test_scripted_client_reproduces_offline_agent_log():
    """A client mirroring the agent's intent pipeline over the wire gets
    the same run the offline session produces (noise-free config)."""
    path_spec = PathSpec(kind="training", sweep_deg=45.0)
    cap = 12.0
    offline_cfg = SessionConfig(path=path_spec, method="N",
                                driver=DriverSpec(kind="agent", params=QUIET,
                                                  seed=0),
                                duration_cap=cap)
    offline = run_session(offline_cfg)

    client_cfg = SessionConfig(path=path_spec, method="N",
                               driver=DriverSpec(kind="external"),
                               duration_cap=cap)
    path = build_training_path(path_spec.sweep_deg * 3.141592653589793 / 180.0)
    agent = DriverAgent(path, QUIET, seed=0)
    frames = []
    with _lockstep_client(client_cfg) as client:
        with client.websocket_connect("/drive") as ws:
            ws.receive_text()
            state = VehicleState()  # session start state
            while True:
                intent_s, intent_a = agent.tick(state)
                ws.send_text(json.dumps({"type": "input",
                                         "steer_intent": intent_s,
                                         "accel_intent": intent_a,
                                         "brake_intent": 0.0}))
                frame = json.loads(ws.receive_text())
                frames.append(frame)
                if frame["done"]:
                    break
                nxt = frame["next"]
                state = VehicleState(x=nxt["x"], y=nxt["y"],
                                     heading=nxt["heading"], v=nxt["v"],
                                     yaw_rate=nxt["yaw_rate"], rpm=nxt["rpm"])
    assert len(frames) == len(offline)
    for k in (0, 1, len(frames) // 2, len(frames) - 1):
        f = frames[k]
        assert f["x"] == offline.x[k]
        assert f["y"] == offline.y[k]
        assert f["v"] == offline.v[k]
        assert f["theta_s"] == offline.theta_s[k]
        assert f["theta_a"] == offline.theta_a[k]
    assert frames[-1]["done_reason"] == offline.manifest["done_reason"]


def test_wall_pacing_cadence():
    cfg = _external_cfg(cap=60.0)
    with TestClient(create_app(DriveService(cfg, pacing="wall"))) as client:
        with client.websocket_connect("/drive") as ws:
            ws.receive_text()  # hello
            ws.receive_text()  # first frame: stream is running
            t0 = time.monotonic()
            n = 50
            for _ in range(n):
                ws.receive_text()
            elapsed = time.monotonic() - t0
    rate = n / elapsed
    assert 45.0 <= rate <= 55.0
