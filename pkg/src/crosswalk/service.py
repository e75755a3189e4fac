"""Human-in-the-loop session server.

Runs the engine wall-clock paced, streams state messages over a websocket,
and accepts live pedestrian commands (keyboard speed, intention slider) that
feed the engine's external command source.  Sessions whose scenario uses any
other pedestrian model are accepted as spectators: the same protocol then
works as a live trace viewer and inputs are ignored.

Wire protocol (JSON over websocket):

  server -> client   {"type": "hello", "scenario": name}
                     {"type": "state", "t", "veh": {d, v, a},
                      "ped": {d, v, i_raw, i_eff}, "mode", "flags": {...}}
  client -> server   {"type": "input", "v_ped"?, "i_ped"?, "t"?}
                     {"type": "control", "action": "start|pause|reset|set_pace",
                      "value"?}

HTTP: GET /scenarios, POST /sessions, GET /sessions/{id},
GET /sessions/{id}/trace (CSV), GET /sessions/{id}/inputs (applied log).

Every session is one logical ticking context: inbound messages enter through
a buffer and are applied at tick boundaries only, so a live run is exactly
reproducible offline by replaying the applied-input log through the scripted
model (see `replay_scenario`).
"""

from __future__ import annotations

import asyncio
import itertools
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse

from .config import load_scenario
from .engine import ScenarioConfig, Simulation, SimulationResult, trace_csv_text
from .errors import ConfigError
from .pedestrian import ExternalPedestrian

# Outbound state stream is decimated to at most this many messages per second.
MAX_BROADCAST_HZ = 30.0

# A client whose send queue backs up this far is dropped from the fan-out.
CLIENT_QUEUE_LIMIT = 256


def packaged_scenario_dir() -> Path:
    return Path(str(resources.files("crosswalk").joinpath("data/scenarios")))


def replay_scenario(config: ScenarioConfig,
                    input_log: list[tuple[float, float, float]]) -> ScenarioConfig:
    """Offline twin of a live session: the applied-input log becomes a script.

    Running the result reproduces the live trace exactly, which is the bridge
    between interactive sessions and batch verification."""
    script = [(0.0, config.v_ped0, config.i_ped0)]
    script.extend((t, v, i) for t, v, i in input_log)
    return replace(config, pedestrian_model="scripted", script=script,
                   name=config.name + "_replay")


@dataclass
class Session:
    session_id: str
    scenario_name: str
    sim: Simulation
    pace: float = 1.0
    running: bool = False
    input_buffer: list[dict] = field(default_factory=list)
    input_log: list[tuple[float, float, float]] = field(default_factory=list)
    clients: dict[int, asyncio.Queue] = field(default_factory=dict)
    tick_task: asyncio.Task | None = None
    grace_task: asyncio.Task | None = None

    @property
    def is_live(self) -> bool:
        return isinstance(self.sim.model, ExternalPedestrian)

    @property
    def decimation(self) -> int:
        ticks_per_wall_second = self.pace / self.sim.config.dt
        return max(1, math.ceil(ticks_per_wall_second / MAX_BROADCAST_HZ))

    def broadcast(self, message: dict):
        dead = []
        for cid, queue in self.clients.items():
            try:
                queue.put_nowait(message)
            except asyncio.QueueFull:
                dead.append(cid)  # slow client: drop it, never stall the tick
        for cid in dead:
            self.clients.pop(cid, None)

    def apply_pending_input(self):
        """Apply the newest non-stale buffered command at a tick boundary."""
        if not self.input_buffer:
            return
        buffered, self.input_buffer = self.input_buffer, []
        if not self.is_live:
            return
        now = self.sim.t
        dt = self.sim.config.dt

        def stale(m: dict) -> bool:
            t = m.get("t")
            return isinstance(t, (int, float)) and t < now - dt

        fresh = [m for m in buffered if not stale(m)]
        if not fresh:
            return
        msg = fresh[-1]
        v_ped = msg.get("v_ped")
        i_ped = msg.get("i_ped")
        model: ExternalPedestrian = self.sim.model
        model.apply(v_ped if isinstance(v_ped, (int, float)) else None,
                    i_ped if isinstance(i_ped, (int, float)) else None)
        self.input_log.append((now, model.v, model.i))

    async def tick_loop(self):
        loop = asyncio.get_running_loop()
        deadline = loop.time()
        since_broadcast = 0
        while self.running and not self.sim.done:
            deadline += self.sim.config.dt / self.pace
            delay = deadline - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                deadline = loop.time()  # fell behind: resync, do not burst
            if not self.running:
                break
            self.apply_pending_input()
            self.sim.step()
            since_broadcast += 1
            if since_broadcast >= self.decimation or self.sim.done:
                self.broadcast(self.sim.snapshot())
                since_broadcast = 0
        self.running = False

    def start(self):
        if self.running or self.sim.done:
            return
        self.running = True
        self.tick_task = asyncio.get_running_loop().create_task(self.tick_loop())

    async def pause(self):
        self.running = False
        if self.tick_task is not None:
            task, self.tick_task = self.tick_task, None
            try:
                await task
            except asyncio.CancelledError:
                pass

    async def reset(self):
        await self.pause()
        self.sim.reset()
        self.input_buffer.clear()
        self.input_log.clear()
        self.broadcast(self.sim.snapshot())

    def result(self) -> SimulationResult:
        return SimulationResult(records=self.sim.records, timeout=self.sim.timeout,
                                config=self.sim.config)


def create_app(scenario_dir: str | Path | None = None,
               disconnect_grace_s: float = 30.0) -> FastAPI:
    """Build the session server application."""
    app = FastAPI(title="crosswalk session server")
    scenarios_root = Path(scenario_dir) if scenario_dir else packaged_scenario_dir()
    sessions: dict[str, Session] = {}
    counter = itertools.count(1)

    def list_scenarios() -> list[str]:
        if not scenarios_root.is_dir():
            return []
        return sorted(p.stem for p in scenarios_root.glob("*.cfg"))

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
        return session

    @app.get("/scenarios")
    async def scenarios():
        return {"scenarios": list_scenarios()}

    @app.post("/sessions")
    async def open_session(body: dict):
        name = body.get("scenario")
        if not name or name not in list_scenarios():
            raise HTTPException(status_code=400,
                                detail=f"unknown scenario {name!r}; "
                                       f"available: {list_scenarios()}")
        overrides = body.get("overrides") or []
        try:
            config = load_scenario(scenarios_root / f"{name}.cfg",
                                   overrides=list(overrides), name=name)
            sim = Simulation(config)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        pace = float(body.get("pace", 1.0))
        if not pace > 0:
            raise HTTPException(status_code=400, detail="pace must be > 0")
        session = Session(session_id=f"s{next(counter)}", scenario_name=name,
                          sim=sim, pace=pace)
        sessions[session.session_id] = session
        return {"id": session.session_id, "scenario": name,
                "live": session.is_live, "params": _ui_params(session),
                "state": sim.snapshot()}

    def _ui_params(session: Session) -> dict:
        # the thresholds and geometry the browser needs for bands and chart
        # guide lines
        d = session.sim.config.decision
        g = session.sim.config.geometry
        return {"i_ped_h": d.i_ped_h, "i_ped_l": d.i_ped_l,
                "v_veh_d": d.v_veh_d, "d_nz": g.d_nz, "d_ca": g.d_ca,
                "l_corridor": g.l_corridor,
                "crossing_length": g.crossing_length}

    @app.get("/sessions/{session_id}")
    async def session_state(session_id: str):
        session = get_session(session_id)
        return {"id": session.session_id, "scenario": session.scenario_name,
                "running": session.running, "pace": session.pace,
                "live": session.is_live, "clients": len(session.clients),
                "params": _ui_params(session), "state": session.sim.snapshot()}

    @app.get("/sessions/{session_id}/trace")
    async def session_trace(session_id: str):
        session = get_session(session_id)
        return PlainTextResponse(trace_csv_text(session.sim.records),
                                 media_type="text/csv")

    @app.get("/sessions/{session_id}/inputs")
    async def session_inputs(session_id: str):
        session = get_session(session_id)
        return {"inputs": [{"t": t, "v_ped": v, "i_ped": i}
                           for t, v, i in session.input_log]}

    async def handle_client_message(session: Session, msg: dict):
        kind = msg.get("type")
        if kind == "input":
            session.input_buffer.append(msg)
        elif kind == "control":
            action = msg.get("action")
            if action == "start":
                session.start()
            elif action == "pause":
                await session.pause()
            elif action == "reset":
                await session.reset()
            elif action == "set_pace":
                try:
                    value = float(msg.get("value", 1.0))
                except (TypeError, ValueError):
                    return
                if value > 0:
                    session.pace = value

    async def grace_pause(session: Session):
        await asyncio.sleep(disconnect_grace_s)
        if not session.clients:
            await session.pause()

    @app.websocket("/sessions/{session_id}/ws")
    async def session_ws(ws: WebSocket, session_id: str):
        session = sessions.get(session_id)
        if session is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        if session.grace_task is not None:
            session.grace_task.cancel()
            session.grace_task = None
        cid = id(ws)
        queue: asyncio.Queue = asyncio.Queue(maxsize=CLIENT_QUEUE_LIMIT)
        session.clients[cid] = queue
        await ws.send_json({"type": "hello", "scenario": session.scenario_name})
        await ws.send_json(session.sim.snapshot())

        async def sender():
            while True:
                await ws.send_json(await queue.get())

        send_task = asyncio.get_running_loop().create_task(sender())
        try:
            while True:
                try:
                    msg = await ws.receive_json()
                except ValueError:
                    continue  # malformed payload: ignore, keep the session alive
                if isinstance(msg, dict):
                    await handle_client_message(session, msg)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            send_task.cancel()
            session.clients.pop(cid, None)
            if not session.clients and session.running:
                session.grace_task = asyncio.get_running_loop().create_task(
                    grace_pause(session))

    app.state.sessions = sessions
    app.state.scenario_dir = scenarios_root
    return app
