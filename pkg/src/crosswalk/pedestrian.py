"""Interchangeable pedestrian motion models.

Four sources can drive the simulated pedestrian: a social-force walker, a
solved grid MDP policy, a scripted breakpoint table, and an external command
feed (live human input through the session server).  All of them emit a
`PedestrianCommand` per tick; the engine owns the position integration, so
every source moves the pedestrian through exactly the same kinematics.

Pedestrian kinematics are one-dimensional along the crossing direction:
position d_ped grows from the approach side (negative) through the road to
the far side, speed is non-negative (the walker may stop but not retreat).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError

# Hard physical cap applied by the engine to every emitted speed.
PED_V_MAX = 3.0  # m/s

# Tiny speed offset keeping the vehicle time-gap finite for the MDP binning.
GAP_SPEED_EPS = 1e-3  # m/s


@dataclass(frozen=True, slots=True)
class PedestrianCommand:
    """One tick of pedestrian input: next speed and next raw intention."""

    source: str
    v_ped_next: float
    i_ped_next: float


# ---------------------------------------------------------------------------
# Scripted model


def _script_lookup(script, times, t: float) -> PedestrianCommand:
    # latest breakpoint at or before t; ties resolve to the last one listed,
    # queries before the first breakpoint clamp to it
    idx = bisect_right(times, t) - 1
    if idx < 0:
        idx = 0
    _, v, i = script[idx]
    return PedestrianCommand("Scripted", v, i)


def scripted_step(script: list[tuple[float, float, float]], t: float) -> PedestrianCommand:
    """Piecewise-constant hold of the latest (t, v_ped, i_ped) breakpoint.

    Query times before the first breakpoint return the first breakpoint;
    equal breakpoint times resolve to the last one listed.
    """
    if not script:
        raise ValueError("script must contain at least one breakpoint")
    return _script_lookup(script, [p[0] for p in script], t)


class ScriptedPedestrian:
    """Replays a sorted breakpoint table."""

    def __init__(self, script: list[tuple[float, float, float]]):
        if not script:
            raise ValueError("script must contain at least one breakpoint")
        if any(b[0] > a[0] for b, a in zip(script, script[1:])):
            raise ValueError("script breakpoints must be sorted by time")
        self.script = [(float(t), float(v), float(i)) for t, v, i in script]
        self._times = [p[0] for p in self.script]

    def step(self, d_ped, v_ped, i_ped, veh, t, dt) -> PedestrianCommand:
        return _script_lookup(self.script, self._times, t)


# ---------------------------------------------------------------------------
# Social force model


@dataclass(frozen=True, slots=True)
class SfmParams:
    v0: float = 1.5       # desired walking speed, m/s
    tau: float = 0.5      # relaxation time, s
    a_veh: float = 2.5    # vehicle repulsion magnitude, m/s^2
    b_veh: float = 3.0    # repulsion decay length, m
    goal: float = 10.0    # target position on the far side, m

    def __post_init__(self):
        if self.v0 <= 0 or self.tau <= 0 or self.b_veh <= 0 or self.a_veh < 0:
            raise ValueError(f"invalid SFM parameters: {self}")


def sfm_accel(d_ped: float, v_ped: float, d_veh: float, params: SfmParams,
              d_ca: float = 2.0) -> float:
    """Signed walking acceleration: goal relaxation plus vehicle repulsion.

    The repulsion decays exponentially with the Euclidean gap between the
    agents (paths cross at the origin) and points away from the road on the
    approach side, onward past it.
    """
    e_goal = 1.0 if d_ped < params.goal else (-1.0 if d_ped > params.goal else 0.0)
    drive = (params.v0 * e_goal - v_ped) / params.tau
    gap = math.hypot(d_veh, d_ped)
    repulsion = params.a_veh * math.exp((d_ca - gap) / params.b_veh)
    e_away = -1.0 if d_ped < 0.0 else 1.0
    return drive + repulsion * e_away


def sfm_step(d_ped: float, v_ped: float, i_ped: float, veh, params: SfmParams,
             dt: float, d_ca: float = 2.0) -> PedestrianCommand:
    """Integrate the force law one step; speed clamped to [0, 2*v0]."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    a = sfm_accel(d_ped, v_ped, veh.d_veh, params, d_ca)
    v_next = v_ped + a * dt
    v_cap = 2.0 * params.v0
    if v_next < 0.0:
        v_next = 0.0
    elif v_next > v_cap:
        v_next = v_cap
    return PedestrianCommand("SFM", v_next, i_ped)


class SfmPedestrian:
    def __init__(self, params: SfmParams, d_ca: float = 2.0):
        self.params = params
        self.d_ca = d_ca

    def step(self, d_ped, v_ped, i_ped, veh, t, dt) -> PedestrianCommand:
        return sfm_step(d_ped, v_ped, i_ped, veh, self.params, dt, self.d_ca)


# ---------------------------------------------------------------------------
# MDP model

ACTIONS = ("accelerate", "hold", "decelerate", "wait")
ACCELERATE, HOLD, DECELERATE, WAIT = range(4)


@dataclass
class MdpModel:
    """Grid MDP over (position bin, speed bin, vehicle-gap bin).

    The walker plans against a coarse internal picture of the vehicle: the
    time gap to the conflict point drops one bin per planning step, and once
    it empties the vehicle has passed and the road is clear for good.  The
    top gap bin means no imminent vehicle and is absorbing.  Entering the
    collision corridor while the gap bin is critical costs the proximity
    penalty; reaching the goal cell ends the episode with the goal reward.

    Solved models are immutable by convention and safe to share across
    concurrently running simulations.
    """

    goal_reward: float = 10.0
    proximity_penalty: float = -50.0
    step_cost: float = -0.1
    gamma: float = 0.95
    pos_lo: float = -10.0
    pos_width: float = 1.0
    n_pos: int = 20
    vel_width: float = 0.5
    n_vel: int = 5
    gap_edges: tuple[float, ...] = (0.0, 1.0, 2.0, 4.0, 8.0)
    dv: float = 0.5
    dt_plan: float = 1.0
    d_ca: float = 2.0
    goal_position: float = 8.0
    rewards: np.ndarray | None = None
    values: np.ndarray | None = None
    policy: np.ndarray | None = None
    residuals: list[float] = field(default_factory=list)
    solved: bool = False

    @property
    def n_gap(self) -> int:
        return len(self.gap_edges)

    @property
    def n_states(self) -> int:
        return self.n_pos * self.n_vel * self.n_gap

    def pos_center(self, ip: int) -> float:
        return self.pos_lo + (ip + 0.5) * self.pos_width

    def vel_center(self, iv: int) -> float:
        return iv * self.vel_width

    def state_index(self, ip: int, iv: int, ig: int) -> int:
        return (ip * self.n_vel + iv) * self.n_gap + ig

    def bin_pos(self, d_ped: float) -> int:
        return _nearest_bin(d_ped, self.pos_center(0), self.pos_width, self.n_pos)

    def bin_vel(self, v_ped: float) -> int:
        return _nearest_bin(v_ped, 0.0, self.vel_width, self.n_vel)

    def bin_gap(self, d_veh: float, v_veh: float) -> int:
        if d_veh < 0.0:
            return self.n_gap - 1  # vehicle has passed: road is clear
        gap_t = d_veh / (v_veh + GAP_SPEED_EPS)
        idx = 0
        for k in range(self.n_gap - 1, 0, -1):
            if gap_t >= self.gap_edges[k]:
                idx = k
                break
        return idx

    def is_goal_cell(self, ip: int) -> bool:
        return self.pos_center(ip) >= self.goal_position


def _nearest_bin(x: float, center0: float, width: float, n: int) -> int:
    # Nearest cell center; exact midpoints resolve to the lower-index cell.
    idx = math.ceil((x - center0) / width - 0.5)
    if idx < 0:
        return 0
    if idx >= n:
        return n - 1
    return idx


def make_mdp_model(goal_reward: float = 10.0, proximity_penalty: float = -50.0,
                   step_cost: float = -0.1, gamma: float = 0.95,
                   **grid_kwargs) -> MdpModel:
    """Build an unsolved model with its reward table filled in."""
    model = MdpModel(goal_reward=goal_reward, proximity_penalty=proximity_penalty,
                     step_cost=step_cost, gamma=gamma, **grid_kwargs)
    n_s, n_a = model.n_states, len(ACTIONS)
    rewards = np.empty((n_s, n_a), dtype=float)
    for ip in range(model.n_pos):
        pos = model.pos_center(ip)
        in_corridor = abs(pos) < model.d_ca
        goal = model.is_goal_cell(ip)
        for iv in range(model.n_vel):
            for ig in range(model.n_gap):
                s = model.state_index(ip, iv, ig)
                if goal:
                    rewards[s, :] = goal_reward
                else:
                    r = step_cost
                    if in_corridor and ig == 0:
                        r += proximity_penalty
                    rewards[s, :] = r
    model.rewards = rewards
    return model


def _transition_tables(model: MdpModel) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic next-state table and terminal mask."""
    n_s, n_a = model.n_states, len(ACTIONS)
    nxt = np.empty((n_s, n_a), dtype=np.int64)
    terminal = np.zeros(n_s, dtype=bool)
    v_max = model.vel_center(model.n_vel - 1)
    for ip in range(model.n_pos):
        goal = model.is_goal_cell(ip)
        for iv in range(model.n_vel):
            v = model.vel_center(iv)
            for ig in range(model.n_gap):
                s = model.state_index(ip, iv, ig)
                if goal:
                    terminal[s] = True
                    nxt[s, :] = s
                    continue
                if ig == model.n_gap - 1:
                    ig2 = ig                      # no imminent vehicle
                elif ig == 0:
                    ig2 = model.n_gap - 1         # vehicle passes, road clears
                else:
                    ig2 = ig - 1
                for a in range(n_a):
                    if a == ACCELERATE:
                        v2 = min(v + model.dv, v_max)
                    elif a == DECELERATE:
                        v2 = max(v - model.dv, 0.0)
                    elif a == WAIT:
                        v2 = 0.0
                    else:
                        v2 = v
                    iv2 = model.bin_vel(v2)
                    ip2 = model.bin_pos(model.pos_center(ip) + v2 * model.dt_plan)
                    nxt[s, a] = model.state_index(ip2, iv2, ig2)
    return nxt, terminal


def mdp_solve(model: MdpModel, tol: float = 1e-8, max_iter: int = 20000) -> MdpModel:
    """Value-iterate to convergence and extract the greedy policy.

    Terminal (goal) cells keep their immediate reward as value.  Greedy ties
    resolve to the lowest action index (accelerate < hold < decelerate <
    wait).  Raises SolverError if the residual does not drop below tol
    within the iteration cap.
    """
    if model.rewards is None:
        raise ValueError("model has no reward table; build it with make_mdp_model")
    if not 0.0 < model.gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if not np.all(np.isfinite(model.rewards)):
        raise ValueError("rewards must be finite")

    nxt, terminal = _transition_tables(model)
    r = model.rewards
    v = np.zeros(model.n_states)
    residuals: list[float] = []
    for _ in range(max_iter):
        q = r + model.gamma * v[nxt]
        q[terminal] = r[terminal]
        v_new = q.max(axis=1)
        resid = float(np.max(np.abs(v_new - v)))
        residuals.append(resid)
        v = v_new
        if resid < tol:
            break
    else:
        raise SolverError(f"value iteration did not reach tol={tol} "
                          f"within {max_iter} iterations (residual {residuals[-1]:.3e})")

    q = r + model.gamma * v[nxt]
    q[terminal] = r[terminal]
    model.values = v
    model.policy = np.argmax(q, axis=1).astype(np.int8)
    model.residuals = residuals
    model.solved = True
    return model


def mdp_step(d_ped: float, v_ped: float, i_ped: float, veh, model: MdpModel,
             dt: float) -> PedestrianCommand:
    """Apply the solved policy at the discretized state.

    States off the grid clamp to the boundary cell.  In a goal cell the
    walker has arrived and simply stands (wait), independent of the policy
    table.  Actions shift the commanded speed by one increment (or zero it);
    the engine integrates position.
    """
    if not model.solved:
        raise ValueError("model must be solved before stepping")
    ip = model.bin_pos(d_ped)
    if model.is_goal_cell(ip):
        return PedestrianCommand("MDP", 0.0, i_ped)
    iv = model.bin_vel(v_ped)
    ig = model.bin_gap(veh.d_veh, veh.v_veh)
    a = int(model.policy[model.state_index(ip, iv, ig)])
    v_max = model.vel_center(model.n_vel - 1)
    if a == ACCELERATE:
        v_next = min(v_ped + model.dv, v_max)
    elif a == DECELERATE:
        v_next = max(v_ped - model.dv, 0.0)
    elif a == WAIT:
        v_next = 0.0
    else:
        v_next = v_ped
    return PedestrianCommand("MDP", v_next, i_ped)


class MdpPedestrian:
    def __init__(self, model: MdpModel):
        if not model.solved:
            raise ValueError("MdpPedestrian needs a solved model")
        self.model = model
        # plain-int lookup tables keep the per-tick cost off numpy
        self._policy = model.policy.tolist()

    def step(self, d_ped, v_ped, i_ped, veh, t, dt) -> PedestrianCommand:
        return mdp_step(d_ped, v_ped, i_ped, veh, self.model, dt)


# ---------------------------------------------------------------------------
# External command source (live human input)


class ExternalPedestrian:
    """Holds the last externally supplied (speed, intention) pair.

    Keyboard and slider input is event-based while the engine needs a
    continuous signal, so values persist between updates.
    """

    def __init__(self, v0: float = 0.0, i0: float = 0.0):
        self.v = float(v0)
        self.i = float(i0)

    def apply(self, v_ped: float | None = None, i_ped: float | None = None):
        if v_ped is not None:
            self.v = min(max(float(v_ped), 0.0), PED_V_MAX)
        if i_ped is not None:
            self.i = min(max(float(i_ped), 0.0), 1.0)

    def step(self, d_ped, v_ped, i_ped, veh, t, dt) -> PedestrianCommand:
        return PedestrianCommand("External", self.v, self.i)
