"""Interactive session: the simulation loop plus a websocket endpoint.

Two logical threads: the simulation advances in (scaled) real time under a
lock, publishing immutable state frames into a newest-wins slot; each
client connection reads inputs and streams frames at up to 30 Hz.  A slow
client only ever skips frames, it can never back the loop up.
"""

from __future__ import annotations

import json
import threading
import time
from typing import Any

import numpy as np
from websockets.sync.server import serve as ws_serve

from .se3 import Pose
from .trace import dumps_line
from .world import Scenario, Simulation

FRAME_HZ = 30.0

CLIENT_MESSAGE_TYPES = {
    "set_tool_pose",
    "set_force",
    "press_device",
    "pull_pin",
    "reattach",
    "set_config",
}


class ServeSession:
    def __init__(self, scenario: Scenario, seed: int = 0, time_scale: float = 1.0):
        scenario.interactive = True
        self.scenario = scenario
        self.sim = Simulation(scenario, seed=seed)
        self.lock = threading.Lock()
        self.stop_event = threading.Event()
        self.time_scale = time_scale
        self._frame: dict[str, Any] | None = None
        self._frame_seq = 0
        self._frame_cond = threading.Condition()

    # -- simulation thread -------------------------------------------------
    def loop(self) -> None:
        tick = self.scenario.tick
        while not self.stop_event.is_set():
            start = time.monotonic()
            with self.lock:
                row = self.sim.step()
            frame = {"type": "state", **row}
            with self._frame_cond:
                self._frame = frame
                self._frame_seq += 1
                self._frame_cond.notify_all()
            elapsed = time.monotonic() - start
            delay = tick / self.time_scale - elapsed
            if delay > 0:
                time.sleep(delay)

    # -- per-connection ----------------------------------------------------
    def handle_message(self, raw: str) -> dict[str, Any] | None:
        """Apply one client message; returns an error frame on violation."""
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError as exc:
            return {"type": "error", "message": f"not valid JSON: {exc.msg}"}
        if not isinstance(msg, dict) or "type" not in msg:
            return {"type": "error", "message": "message must be an object with a 'type'"}
        kind = msg["type"]
        if kind not in CLIENT_MESSAGE_TYPES:
            return {"type": "error", "message": f"unknown message type {kind!r}"}
        try:
            with self.lock:
                if kind == "set_tool_pose":
                    self.sim.set_tool_pose(
                        Pose(np.asarray(msg["position"], dtype=float),
                             np.asarray(msg["quaternion"], dtype=float))
                    )
                elif kind == "set_force":
                    self.sim.set_pull_force(float(msg["newtons"]))
                elif kind == "press_device":
                    self.sim.set_device(bool(msg["pressed"]), msg.get("twist"))
                elif kind == "pull_pin":
                    self.sim.pull_pin()
                elif kind == "reattach":
                    self.sim.reattach()
                elif kind == "set_config":
                    self._set_config(msg["path"], msg["value"])
        except (KeyError, ValueError, TypeError, AttributeError) as exc:
            return {"type": "error", "message": f"bad {kind} message: {exc}"}
        return None

    def _set_config(self, path: str, value: Any) -> None:
        parts = path.split(".")
        if len(parts) < 2:
            raise ValueError(f"config path {path!r} must be like 'teleop.force_limit'")
        target = getattr(self.scenario, parts[0])
        for part in parts[1:-1]:
            target = getattr(target, part)
        if not hasattr(target, parts[-1]):
            raise ValueError(f"no config field {path!r}")
        setattr(target, parts[-1], value)

    def handler(self, websocket) -> None:
        sender = threading.Thread(target=self._send_frames, args=(websocket,), daemon=True)
        sender.start()
        try:
            for raw in websocket:
                err = self.handle_message(raw)
                if err is not None:
                    websocket.send(dumps_line(err))
        except Exception:
            pass  # connection closed

    def _send_frames(self, websocket) -> None:
        last_sent = 0
        min_period = 1.0 / FRAME_HZ
        while not self.stop_event.is_set():
            with self._frame_cond:
                self._frame_cond.wait_for(lambda: self._frame_seq > last_sent, timeout=0.5)
                frame, seq = self._frame, self._frame_seq
            if frame is None or seq == last_sent:
                continue
            last_sent = seq
            try:
                websocket.send(dumps_line(frame))
            except Exception:
                return
            time.sleep(min_period)


def serve(
    scenario: Scenario,
    port: int,
    seed: int = 0,
    time_scale: float = 1.0,
    ready: threading.Event | None = None,
    stop: threading.Event | None = None,
) -> None:
    session = ServeSession(scenario, seed=seed, time_scale=time_scale)
    if stop is not None:
        session.stop_event = stop
    sim_thread = threading.Thread(target=session.loop, daemon=True)
    sim_thread.start()
    with ws_serve(session.handler, "127.0.0.1", port) as server:
        if ready is not None:
            ready.set()
        waiter = threading.Thread(target=server.serve_forever, daemon=True)
        waiter.start()
        try:
            while not session.stop_event.is_set():
                time.sleep(0.1)
        except KeyboardInterrupt:
            pass
        finally:
            session.stop_event.set()
            server.shutdown()
