"""Deterministic fixed-step crossing simulator.

One `Simulation` instance runs one scenario: each tick steps the pedestrian
model, assembles the controller's observation, runs the decision ladder,
integrates the double-integrator vehicle, evaluates the completion events and
appends a trace record.  Runs are strictly single-threaded and free of global
state, so independent configurations may execute concurrently (the parameter
tuner relies on that).
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

from . import decision as dec
from . import pedestrian as ped_models
from .decision import (DecisionParams, InteractionAnchor, Mode,
                       PedestrianObservation, VehicleState)
from .errors import ConfigError

VEH_V_CAP = 15.0  # m/s, physical top speed of the test vehicle


@dataclass(frozen=True, slots=True)
class Geometry:
    """Crossing layout around the conflict point at the origin."""

    d_nz: float = 4.0             # near-zone radius, m
    d_ca: float = 2.0             # collision-area radius, m
    l_corridor: float = 4.0       # conflict corridor length along the road, m
    crossing_length: float = 20.0  # full span of the pedestrian's crossing, m

    def __post_init__(self):
        if not 0 < self.d_ca < self.d_nz:
            raise ConfigError(f"need 0 < d_ca < d_nz, got {self.d_ca}, {self.d_nz}")
        if self.l_corridor <= 0:
            raise ConfigError("l_corridor must be > 0")
        if self.crossing_length / 2.0 <= self.d_ca:
            raise ConfigError("crossing_length/2 must exceed d_ca so that a "
                              "crossed pedestrian has also gone through")


@dataclass(frozen=True, slots=True)
class EventFlags:
    ped_in_ca: bool
    ped_in_nz: bool
    ped_gone: bool
    ped_crossed: bool
    veh_gone: bool


@dataclass(slots=True)
class TraceRecord:
    t: float
    d_veh: float
    v_veh: float
    a_veh: float
    d_ped: float
    v_ped: float
    i_raw: float
    i_eff: float
    mode: str
    ped_in_ca: bool
    ped_in_nz: bool
    ped_gone: bool
    ped_crossed: bool
    veh_gone: bool


@dataclass
class ScenarioConfig:
    """Everything one deterministic run needs."""

    dt: float = 0.01
    t_max: float = 60.0
    geometry: Geometry = field(default_factory=Geometry)
    d_veh0: float = 40.0
    v_veh0: float = 8.33
    d_ped0: float = -6.0
    v_ped0: float = 0.0
    i_ped0: float = 0.0
    pedestrian_model: str = "scripted"
    script: list[tuple[float, float, float]] | None = None
    sfm: ped_models.SfmParams | None = None
    mdp: ped_models.MdpModel | None = None
    decision: DecisionParams = field(default_factory=DecisionParams)
    seed: int = 0
    name: str = ""

    def validate(self):
        if self.dt <= 0:
            raise ConfigError("dt must be > 0")
        if self.t_max <= 0:
            raise ConfigError("t_max must be > 0")
        if self.d_veh0 <= 0:
            raise ConfigError("d_veh0 must be > 0")
        if self.v_veh0 < 0:
            raise ConfigError("v_veh0 must be >= 0")
        if self.v_ped0 < 0:
            raise ConfigError("v_ped0 must be >= 0")
        if not 0.0 <= self.i_ped0 <= 1.0:
            raise ConfigError("i_ped0 must lie in [0, 1]")
        if self.pedestrian_model not in ("scripted", "sfm", "mdp", "external"):
            raise ConfigError(f"unknown pedestrian model {self.pedestrian_model!r}")
        if self.pedestrian_model == "scripted" and not self.script:
            raise ConfigError("scripted model needs a non-empty script")
        if self.pedestrian_model == "mdp" and self.mdp is None:
            raise ConfigError("mdp model selected but no model supplied")
        if (self.geometry.d_nz != self.decision.d_nz
                or self.geometry.d_ca != self.decision.d_ca):
            raise ConfigError("geometry and decision zone radii must agree")

    def build_pedestrian(self):
        if self.pedestrian_model == "scripted":
            return ped_models.ScriptedPedestrian(self.script)
        if self.pedestrian_model == "sfm":
            params = self.sfm if self.sfm is not None else ped_models.SfmParams()
            return ped_models.SfmPedestrian(params, d_ca=self.geometry.d_ca)
        if self.pedestrian_model == "mdp":
            model = self.mdp
            if not model.solved:
                model = ped_models.mdp_solve(model)
            return ped_models.MdpPedestrian(model)
        return ped_models.ExternalPedestrian(self.v_ped0, self.i_ped0)


def vehicle_step(veh: VehicleState, a_cmd: float, dt: float,
                 a_min: float = dec.A_MIN, a_max: float = dec.A_MAX,
                 v_cap: float = VEH_V_CAP) -> VehicleState:
    """Semi-implicit Euler: velocity first, then position with the new
    velocity.  Exact for the piecewise-constant commands the controller
    emits, one step at a time.  The vehicle never reverses."""
    a = a_cmd
    if a < a_min:
        a = a_min
    elif a > a_max:
        a = a_max
    v = veh.v_veh + a * dt
    if v < 0.0:
        v = 0.0
    elif v > v_cap:
        v = v_cap
    return VehicleState(d_veh=veh.d_veh - v * dt, v_veh=v, a_veh=a)


def ttc(d_veh: float, v_veh: float, k_num: float) -> float:
    """Time-to-conflict-point |d / (v + k_num)|; k_num keeps it finite."""
    if k_num <= 0:
        raise ValueError("k_num must be > 0")
    return abs(d_veh / (v_veh + k_num))


def evaluate_events(d_veh: float, d_ped: float, geometry: Geometry) -> EventFlags:
    """Completion and zone flags for the joint state.

    Gone-through means the pedestrian has exited the conflict corridor on
    the far side; crossed means the full crossing span is behind them; the
    vehicle is gone once its front has cleared the corridor.
    """
    return EventFlags(
        ped_in_ca=-geometry.d_ca < d_ped < geometry.d_ca,
        ped_in_nz=-geometry.d_nz < d_ped < geometry.d_nz,
        ped_gone=d_ped > geometry.d_ca,
        ped_crossed=d_ped >= geometry.crossing_length / 2.0,
        veh_gone=d_veh < -geometry.l_corridor,
    )


class Simulation:
    """Stepwise driver for one scenario, usable paced (service) or batch."""

    def __init__(self, config: ScenarioConfig):
        config.validate()
        self.config = config
        self.records: list[TraceRecord] = []
        self.timeout = False
        self.reset()

    def reset(self):
        cfg = self.config
        self.model = cfg.build_pedestrian()
        self.veh = VehicleState(d_veh=cfg.d_veh0, v_veh=cfg.v_veh0, a_veh=0.0)
        self.d_ped = cfg.d_ped0
        self.v_ped = cfg.v_ped0
        self.i_raw = cfg.i_ped0
        self.anchor: InteractionAnchor | None = None
        self.events = evaluate_events(cfg.d_veh0, cfg.d_ped0, cfg.geometry)
        self.tick = 0
        self.n_max = int(round(cfg.t_max / cfg.dt))
        self.records = []
        self.timeout = False
        self.last_mode: Mode | None = None
        self.last_i_eff = cfg.i_ped0

    @property
    def t(self) -> float:
        return self.tick * self.config.dt

    @property
    def done(self) -> bool:
        if self.events.veh_gone or self.events.ped_crossed:
            return True
        return self.tick >= self.n_max

    def step(self) -> TraceRecord:
        cfg = self.config
        dt = cfg.dt
        t = self.tick * dt

        cmd = self.model.step(self.d_ped, self.v_ped, self.i_raw, self.veh, t, dt)
        v = cmd.v_ped_next
        if v < 0.0:
            v = 0.0
        elif v > ped_models.PED_V_MAX:
            v = ped_models.PED_V_MAX
        i = cmd.i_ped_next
        if i < 0.0:
            i = 0.0
        elif i > 1.0:
            i = 1.0
        self.v_ped = v
        self.i_raw = i
        self.d_ped += v * dt

        obs = PedestrianObservation(self.d_ped, v, i, t)
        self.anchor = dec.update_anchor(self.anchor, obs, cfg.decision)
        out = dec.decide(self.veh, obs, cfg.decision, self.anchor, self.events,
                         cfg.geometry.l_corridor)
        self.veh = vehicle_step(self.veh, out.a_veh_des, dt)
        self.tick += 1
        self.events = evaluate_events(self.veh.d_veh, self.d_ped, cfg.geometry)
        ev = self.events
        rec = TraceRecord(
            t=self.tick * dt, d_veh=self.veh.d_veh, v_veh=self.veh.v_veh,
            a_veh=self.veh.a_veh, d_ped=self.d_ped, v_ped=v, i_raw=i,
            i_eff=out.i_ped_eff, mode=out.mode.value,
            ped_in_ca=ev.ped_in_ca, ped_in_nz=ev.ped_in_nz, ped_gone=ev.ped_gone,
            ped_crossed=ev.ped_crossed, veh_gone=ev.veh_gone,
        )
        self.records.append(rec)
        self.last_mode = out.mode
        self.last_i_eff = out.i_ped_eff
        if self.tick >= self.n_max and not (ev.veh_gone or ev.ped_crossed):
            self.timeout = True
        return rec

    def run_to_end(self) -> "SimulationResult":
        while not self.done:
            self.step()
        return SimulationResult(records=self.records, timeout=self.timeout,
                                config=self.config)

    def snapshot(self) -> dict:
        """Latest state as the wire-format dictionary used by the service."""
        ev = self.events
        return {
            "type": "state",
            "t": self.t,
            "veh": {"d": self.veh.d_veh, "v": self.veh.v_veh, "a": self.veh.a_veh},
            "ped": {"d": self.d_ped, "v": self.v_ped, "i_raw": self.i_raw,
                    "i_eff": self.last_i_eff},
            "mode": self.last_mode.value if self.last_mode is not None else None,
            "flags": {"ped_in_ca": ev.ped_in_ca, "ped_in_nz": ev.ped_in_nz,
                      "ped_gone": ev.ped_gone, "ped_crossed": ev.ped_crossed,
                      "veh_gone": ev.veh_gone, "timeout": self.timeout},
        }


@dataclass
class SimulationResult:
    records: list[TraceRecord]
    timeout: bool
    config: ScenarioConfig


def run(config: ScenarioConfig) -> SimulationResult:
    """Run a scenario to completion.

    The loop ends when either party has fully gone through, or at t_max, in
    which case the result is flagged as a timeout (the deadlock probe)."""
    return Simulation(config).run_to_end()


# ---------------------------------------------------------------------------
# Trace inspection helpers

def separation(d_veh: float, d_ped: float) -> float:
    """Euclidean distance between the agents; their paths cross at the origin."""
    return math.hypot(d_veh, d_ped)


def min_separation(records: list[TraceRecord]) -> float:
    return min(separation(r.d_veh, r.d_ped) for r in records)


def crossing_order(records: list[TraceRecord]) -> str:
    """Who cleared the conflict area first: 'pedestrian_first',
    'vehicle_first', or 'none' if neither did before the trace ended."""
    t_ped = next((r.t for r in records if r.ped_gone), None)
    t_veh = next((r.t for r in records if r.d_veh < 0.0), None)
    if t_ped is None and t_veh is None:
        return "none"
    if t_veh is None or (t_ped is not None and t_ped <= t_veh):
        return "pedestrian_first"
    return "vehicle_first"


def stop_duration(records: list[TraceRecord], v_stop: float = 0.1) -> float:
    """Total time the vehicle spent at effectively zero speed."""
    if not records:
        return 0.0
    dt = records[0].t
    return sum(dt for r in records if r.v_veh < v_stop)


def summarize(result: SimulationResult) -> dict:
    recs = result.records
    return {
        "scenario": result.config.name,
        "outcome": "timeout" if result.timeout else "completed",
        "ticks": len(recs),
        "t_end": recs[-1].t if recs else 0.0,
        "min_v_veh": min(r.v_veh for r in recs) if recs else result.config.v_veh0,
        "min_separation": min_separation(recs) if recs else None,
        "stop_duration": stop_duration(recs),
        "crossing_order": crossing_order(recs),
    }


# ---------------------------------------------------------------------------
# Trace serialization

TRACE_HEADER = ("t,d_veh,v_veh,a_veh,d_ped,v_ped,i_raw,i_eff,mode,"
                "ped_in_ca,ped_in_nz,ped_gone,ped_crossed,veh_gone")

_FLOAT_FIELDS = ("t", "d_veh", "v_veh", "a_veh", "d_ped", "v_ped", "i_raw", "i_eff")
_FLAG_FIELDS = ("ped_in_ca", "ped_in_nz", "ped_gone", "ped_crossed", "veh_gone")


def trace_csv_lines(records: list[TraceRecord]):
    yield TRACE_HEADER
    for r in records:
        yield (f"{r.t!r},{r.d_veh!r},{r.v_veh!r},{r.a_veh!r},{r.d_ped!r},"
               f"{r.v_ped!r},{r.i_raw!r},{r.i_eff!r},{r.mode},"
               f"{int(r.ped_in_ca)},{int(r.ped_in_nz)},{int(r.ped_gone)},"
               f"{int(r.ped_crossed)},{int(r.veh_gone)}")


def write_trace_csv(records: list[TraceRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in trace_csv_lines(records):
            fh.write(line + "\n")


def trace_csv_text(records: list[TraceRecord]) -> str:
    buf = io.StringIO()
    for line in trace_csv_lines(records):
        buf.write(line + "\n")
    return buf.getvalue()


def read_trace_csv(path) -> list[TraceRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != TRACE_HEADER:
            raise ConfigError(f"unexpected trace header: {header!r}")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 14:
                raise ConfigError(f"malformed trace row: {line!r}")
            records.append(TraceRecord(
                t=float(parts[0]), d_veh=float(parts[1]), v_veh=float(parts[2]),
                a_veh=float(parts[3]), d_ped=float(parts[4]), v_ped=float(parts[5]),
                i_raw=float(parts[6]), i_eff=float(parts[7]), mode=parts[8],
                ped_in_ca=parts[9] == "1", ped_in_nz=parts[10] == "1",
                ped_gone=parts[11] == "1", ped_crossed=parts[12] == "1",
                veh_gone=parts[13] == "1"))
    return records


def record_to_state_dict(r: TraceRecord) -> dict:
    """JSON-lines form of one tick, mirroring the service state message."""
    return {
        "type": "state", "t": r.t,
        "veh": {"d": r.d_veh, "v": r.v_veh, "a": r.a_veh},
        "ped": {"d": r.d_ped, "v": r.v_ped, "i_raw": r.i_raw, "i_eff": r.i_eff},
        "mode": r.mode,
        "flags": {"ped_in_ca": r.ped_in_ca, "ped_in_nz": r.ped_in_nz,
                  "ped_gone": r.ped_gone, "ped_crossed": r.ped_crossed,
                  "veh_gone": r.veh_gone},
    }


def write_trace_jsonl(records: list[TraceRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(record_to_state_dict(r), sort_keys=True) + "\n")
