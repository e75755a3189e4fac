"""Session server: protocol, pacing, input semantics, record-and-replay."""

import time

import pytest
from fastapi.testclient import TestClient

from crosswalk.engine import Simulation, trace_csv_text
from crosswalk.service import create_app, packaged_scenario_dir, replay_scenario


@pytest.fixture
def client():
    app = create_app(disconnect_grace_s=0.2)
    with TestClient(app) as c:
        c.app = app
        yield c


def open_session(client, scenario="live", **body):
    resp = client.post("/sessions", json={"scenario": scenario, **body})
    assert resp.status_code == 200, resp.text
    return resp.json()


def recv_states(ws, n=1):
    """Read messages until n state messages arrived; returns the states."""
    states = []
    while len(states) < n:
        msg = ws.receive_json()
        if msg.get("type") == "state":
            states.append(msg)
    return states


def test_scenarios_listing(client):
    names = client.get("/scenarios").json()["scenarios"]
    assert "scenario1" in names and "live" in names
    assert names == sorted(names)


def test_open_session_starts_paused_with_snapshot(client):
    created = open_session(client)
    assert created["live"] is True
    state = created["state"]
    assert state["t"] == 0.0
    assert state["mode"] is None
    assert state["ped"]["d"] == -6.0
    info = client.get(f"/sessions/{created['id']}").json()
    assert info["running"] is False


def test_sessions_are_isolated(client):
    a = open_session(client)
    b = open_session(client, scenario="scenario1")
    assert a["id"] != b["id"]
    assert client.get(f"/sessions/{a['id']}").json()["scenario"] == "live"
    assert client.get(f"/sessions/{b['id']}").json()["scenario"] == "scenario1"


def test_open_session_unknown_scenario_400(client):
    resp = client.post("/sessions", json={"scenario": "nope"})
    assert resp.status_code == 400


def test_hello_handshake_and_hold_last_value(client):
    sid = open_session(client, pace=0.2)["id"]
    with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
        hello = ws.receive_json()
        assert hello == {"type": "hello", "scenario": "live"}
        snap = ws.receive_json()
        assert snap["type"] == "state" and snap["t"] == 0.0
        ws.send_json({"type": "control", "action": "start"})
        states = recv_states(ws, 5)
        # no input was ever sent: the walker holds its initial command
        assert all(s["ped"]["v"] == 0.0 and s["ped"]["i_raw"] == 0.0
                   for s in states)
        ws.send_json({"type": "control", "action": "pause"})


def test_input_reflected_in_next_broadcast(client):
    # loopback contract: the session is paused, the input is buffered, and
    # the very first broadcast after starting reflects it
    sid = open_session(client, pace=0.2)["id"]
    with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
        recv_states(ws, 1)
        ws.send_json({"type": "input", "v_ped": 1.5, "i_ped": 0.55})
        time.sleep(0.05)  # let the server buffer it
        ws.send_json({"type": "control", "action": "start"})
        first = recv_states(ws, 1)[0]
        assert first["ped"]["v"] == 1.5
        assert first["ped"]["i_raw"] == 0.55
        ws.send_json({"type": "control", "action": "pause"})


def test_input_reflected_while_running(client):
    # at pace 0.1 a tick lands every 100 ms of wall time; an input sent
    # between ticks shows up at most two broadcast states later
    sid = open_session(client, pace=0.1)["id"]
    with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
        recv_states(ws, 1)
        ws.send_json({"type": "control", "action": "start"})
        recv_states(ws, 2)
        ws.send_json({"type": "input", "v_ped": 2.0})
        states = recv_states(ws, 3)
        assert any(s["ped"]["v"] == 2.0 for s in states)
        ws.send_json({"type": "control", "action": "pause"})


def test_spectator_session_ignores_inputs(client):
    sid = open_session(client, scenario="sfm_demo", pace=0.2)["id"]
    with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
        recv_states(ws, 1)
        ws.send_json({"type": "input", "v_ped": 3.0, "i_ped": 1.0})
        time.sleep(0.05)
        ws.send_json({"type": "control", "action": "start"})
        states = recv_states(ws, 4)
        # the walker follows its model, not the injected command
        assert all(s["ped"]["v"] != 3.0 for s in states)
        assert all(s["ped"]["i_raw"] == 0.55 for s in states)
        ws.send_json({"type": "control", "action": "pause"})
    assert client.get(f"/sessions/{sid}/inputs").json()["inputs"] == []


def test_stale_timestamped_input_dropped(client):
    sid = open_session(client, pace=0.2)["id"]
    with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
        recv_states(ws, 1)
        ws.send_json({"type": "input", "v_ped": 2.5, "t": -5.0})
        time.sleep(0.05)
        ws.send_json({"type": "control", "action": "start"})
        first = recv_states(ws, 1)[0]
        assert first["ped"]["v"] == 0.0  # stale command never applied
        ws.send_json({"type": "control", "action": "pause"})
    assert client.get(f"/sessions/{sid}/inputs").json()["inputs"] == []


def test_pacing_wall_clock(client):
    # pace 0.5: one simulated second should take two wall seconds +- 10%
    sid = open_session(client, pace=0.5)["id"]
    with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
        recv_states(ws, 1)
        ws.send_json({"type": "control", "action": "start"})
        first = recv_states(ws, 1)[0]
        t0_wall = time.perf_counter()
        t0_sim = first["t"]
        target = t0_sim + 1.0
        while True:
            state = recv_states(ws, 1)[0]
            if state["t"] >= target:
                break
        elapsed = time.perf_counter() - t0_wall
        ws.send_json({"type": "control", "action": "pause"})
    assert 1.8 <= elapsed <= 2.2, f"1 sim-second took {elapsed:.2f}s wall"


def test_set_pace_and_reset(client):
    sid = open_session(client, pace=0.2)["id"]
    with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
        recv_states(ws, 1)
        ws.send_json({"type": "control", "action": "set_pace", "value": 2.0})
        ws.send_json({"type": "control", "action": "start"})
        recv_states(ws, 3)
        ws.send_json({"type": "control", "action": "reset"})
        # reset rewinds to t = 0 and pauses
        while True:
            state = recv_states(ws, 1)[0]
            if state["t"] == 0.0:
                break
    info = client.get(f"/sessions/{sid}").json()
    assert info["running"] is False
    assert info["pace"] == 2.0


def test_trace_download_matches_header(client):
    sid = open_session(client, pace=1.0)["id"]
    with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
        recv_states(ws, 1)
        ws.send_json({"type": "control", "action": "start"})
        recv_states(ws, 3)
        ws.send_json({"type": "control", "action": "pause"})
    text = client.get(f"/sessions/{sid}/trace").text
    assert text.startswith("t,d_veh,v_veh,a_veh,d_ped,v_ped,i_raw,i_eff,mode,")
    assert len(text.strip().splitlines()) > 1


def test_record_and_replay_equivalence(client):
    # the live trace, replayed offline through the scripted model fed with
    # the applied-input log, reproduces the session trace exactly
    sid = open_session(client, pace=5.0)["id"]
    with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
        recv_states(ws, 1)
        ws.send_json({"type": "control", "action": "start"})
        recv_states(ws, 2)
        ws.send_json({"type": "input", "v_ped": 1.5, "i_ped": 0.55})
        recv_states(ws, 3)
        ws.send_json({"type": "input", "v_ped": 0.75})
        recv_states(ws, 3)
        ws.send_json({"type": "input", "v_ped": 2.0, "i_ped": 0.8})
        recv_states(ws, 3)
        ws.send_json({"type": "control", "action": "pause"})
        time.sleep(0.05)

    session = client.app.state.sessions[sid]
    live_csv = trace_csv_text(session.sim.records)
    assert len(session.input_log) == 3

    offline = Simulation(replay_scenario(session.sim.config, session.input_log))
    for _ in range(len(session.sim.records)):
        offline.step()
    assert trace_csv_text(offline.records) == live_csv


def test_disconnect_grace_pauses_session(client):
    sid = open_session(client, pace=0.5)["id"]
    with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
        recv_states(ws, 1)
        ws.send_json({"type": "control", "action": "start"})
        recv_states(ws, 1)
    # client gone: after the grace period the session pauses on its own
    deadline = time.time() + 3.0
    while time.time() < deadline:
        if not client.get(f"/sessions/{sid}").json()["running"]:
            break
        time.sleep(0.05)
    assert client.get(f"/sessions/{sid}").json()["running"] is False


def test_malformed_client_messages_do_not_kill_session(client):
    sid = open_session(client, pace=0.2)["id"]
    with client.websocket_connect(f"/sessions/{sid}/ws") as ws:
        recv_states(ws, 1)
        ws.send_text("this is not json")
        ws.send_json({"type": "control", "action": "set_pace", "value": "fast"})
        ws.send_json({"type": "input", "v_ped": "zoom", "t": "yesterday"})
        ws.send_json({"type": "input", "v_ped": 1.0})
        time.sleep(0.05)
        ws.send_json({"type": "control", "action": "start"})
        first = recv_states(ws, 1)[0]
        # the garbage was ignored; the last well-formed input applied
        assert first["ped"]["v"] == 1.0
        ws.send_json({"type": "control", "action": "pause"})
    info = client.get(f"/sessions/{sid}").json()
    assert info["pace"] == 0.2


def test_packaged_scenarios_available():
    assert (packaged_scenario_dir() / "scenario1.cfg").is_file()
