"""Least-squares adaptation of the walker models to observed trajectories.

Observed pedestrian runs arrive as CSV time series (one row per sample,
uniform sampling); fitting minimizes the squared velocity residual between
the data and a model rollout regenerated under a canonical open-loop vehicle
pass for the trajectory's scenario label.  The residual is non-smooth for the
MDP (policy switches), so both fits use the same derivative-free shrinking
pattern search instead of a gradient method.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError, TrajectoryError
from .pedestrian import (PED_V_MAX, MdpModel, MdpPedestrian, SfmParams,
                         SfmPedestrian, make_mdp_model, mdp_solve)

TRAJECTORY_HEADER = ("traj_id", "t", "d_ped", "v_ped", "label")
LABELS = ("cross_first", "yield")

# Canonical constant-speed vehicle pass per scenario label: (d_veh0, v_veh).
# cross_first leaves the walker the time advantage; yield does not.
LABEL_VEHICLE_PROFILES = {
    "cross_first": (45.0, 5.0),
    "yield": (16.0, 8.33),
}


@dataclass
class Trajectory:
    traj_id: str
    t: np.ndarray
    d_ped: np.ndarray
    v_ped: np.ndarray
    label: str
    dt: float

    def __len__(self) -> int:
        return len(self.t)


@dataclass
class TrajectoryDataset:
    trajectories: list[Trajectory]
    source: str = ""

    def n_samples(self) -> int:
        return sum(len(tr) for tr in self.trajectories)


def load_trajectories(path) -> TrajectoryDataset:
    """Parse and validate a trajectory CSV (schema: traj_id,t,d_ped,v_ped,label)."""
    groups: dict[str, list[tuple[float, float, float, str]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TrajectoryError(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != TRAJECTORY_HEADER:
            raise TrajectoryError(f"{path}: expected header {','.join(TRAJECTORY_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise TrajectoryError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            traj_id, t_raw, d_raw, v_raw, label = (f.strip() for f in row)
            try:
                sample = (float(t_raw), float(d_raw), float(v_raw), label)
            except ValueError as exc:
                raise TrajectoryError(f"{path}:{lineno}: {exc}") from exc
            if label not in LABELS:
                raise TrajectoryError(f"{path}:{lineno}: unknown label {label!r}")
            groups.setdefault(traj_id, []).append(sample)
    if not groups:
        raise TrajectoryError(f"{path}: no data rows")

    trajectories = []
    for traj_id, samples in groups.items():
        t = np.array([s[0] for s in samples])
        labels = {s[3] for s in samples}
        if len(labels) != 1:
            raise TrajectoryError(f"{path}: trajectory {traj_id} mixes labels {sorted(labels)}")
        diffs = np.diff(t)
        if len(t) >= 2:
            if np.any(diffs <= 0):
                raise TrajectoryError(f"{path}: trajectory {traj_id} is not time-sorted")
            dt = float(diffs[0])
            if np.any(np.abs(diffs - dt) > 1e-9):
                raise TrajectoryError(f"{path}: trajectory {traj_id} has non-uniform dt")
        else:
            dt = 0.0
        trajectories.append(Trajectory(
            traj_id=traj_id, t=t,
            d_ped=np.array([s[1] for s in samples]),
            v_ped=np.array([s[2] for s in samples]),
            label=samples[0][3], dt=dt))
    return TrajectoryDataset(trajectories=trajectories, source=str(path))


def write_trajectories(dataset: TrajectoryDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRAJECTORY_HEADER) + "\n")
        for tr in dataset.trajectories:
            for k in range(len(tr)):
                fh.write(f"{tr.traj_id},{float(tr.t[k])!r},{float(tr.d_ped[k])!r},"
                         f"{float(tr.v_ped[k])!r},{tr.label}\n")


# ---------------------------------------------------------------------------
# Model rollouts on a data grid


class _OpenLoopVehicle:
    """Constant-speed vehicle pass used to regenerate model behavior."""

    __slots__ = ("d_veh", "v_veh", "a_veh")

    def __init__(self, d0: float, v: float):
        self.d_veh = d0
        self.v_veh = v
        self.a_veh = 0.0

    def advance(self, dt: float):
        self.d_veh -= self.v_veh * dt


def rollout(driver, d0: float, v0: float, n: int, dt: float,
            label: str) -> tuple[np.ndarray, np.ndarray]:
    """Run a pedestrian model over n uniform samples against the label's
    canonical vehicle pass; mirrors the engine's kinematics exactly."""
    if label not in LABEL_VEHICLE_PROFILES:
        raise TrajectoryError(f"unknown scenario label {label!r}")
    veh = _OpenLoopVehicle(*LABEL_VEHICLE_PROFILES[label])
    d = np.empty(n)
    v = np.empty(n)
    d[0], v[0] = d0, v0
    d_k, v_k = d0, v0
    for k in range(1, n):
        t = (k - 1) * dt
        cmd = driver.step(d_k, v_k, 0.0, veh, t, dt)
        v_k = cmd.v_ped_next
        if v_k < 0.0:
            v_k = 0.0
        elif v_k > PED_V_MAX:
            v_k = PED_V_MAX
        d_k += v_k * dt
        veh.advance(dt)
        d[k], v[k] = d_k, v_k
    return d, v


def velocity_rss(dataset: TrajectoryDataset, make_driver) -> float:
    """Sum of squared velocity residuals of the model across the dataset."""
    total = 0.0
    for tr in dataset.trajectories:
        if len(tr) < 2:
            continue
        _, v_model = rollout(make_driver(), float(tr.d_ped[0]), float(tr.v_ped[0]),
                             len(tr), tr.dt, tr.label)
        diff = v_model - tr.v_ped
        total += float(np.dot(diff, diff))
    return total


# ---------------------------------------------------------------------------
# Pattern search


def pattern_search(f, x0, lo, hi, step0: float = 0.25, shrink: float = 0.5,
                   min_step: float = 1e-4, restarts: int = 7,
                   max_evals: int = 50000) -> tuple[np.ndarray, float]:
    """Compass search with shrinking steps and re-expansion restarts.

    Steps are relative to each coordinate's bound width.  Deterministic, and
    the returned value never exceeds f(x0).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    scale = hi - lo
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    best = f(x)
    evals = 1
    for _ in range(restarts + 1):
        if best == 0.0:
            break
        step = step0
        moved = False
        while step >= min_step and evals < max_evals:
            improved = False
            for i in range(len(x)):
                for sign in (1.0, -1.0):
                    xi = x[i] + sign * step * scale[i]
                    xi = min(max(xi, lo[i]), hi[i])
                    if xi == x[i]:
                        continue
                    cand = x.copy()
                    cand[i] = xi
                    c = f(cand)
                    evals += 1
                    if c < best:
                        best = c
                        x = cand
                        improved = True
            if not improved:
                step *= shrink
            else:
                moved = True
        if not moved:
            break
    return x, best


# ---------------------------------------------------------------------------
# Fits

SFM_FIT_BOUNDS = {
    "v0": (0.3, 3.0),
    "tau": (0.1, 2.0),
    "a_veh": (0.0, 8.0),
    "b_veh": (0.5, 8.0),
}

MDP_FIT_BOUNDS = {
    "goal_reward": (1.0, 60.0),
    "proximity_penalty": (-200.0, -1.0),
    "step_cost": (-2.0, -1e-3),
}


def fit_sfm(dataset: TrajectoryDataset, init: SfmParams,
            bounds: dict[str, tuple[float, float]] | None = None,
            d_ca: float = 2.0) -> tuple[SfmParams, float]:
    """Fit (v0, tau, a_veh, b_veh) to the dataset's velocity traces."""
    if not dataset.trajectories:
        raise TrajectoryError("cannot fit an empty dataset")
    b = dict(SFM_FIT_BOUNDS)
    if bounds:
        b.update(bounds)
    names = ("v0", "tau", "a_veh", "b_veh")
    lo = [b[n][0] for n in names]
    hi = [b[n][1] for n in names]
    x0 = [getattr(init, n) for n in names]

    def cost(x):
        params = SfmParams(v0=x[0], tau=x[1], a_veh=x[2], b_veh=x[3], goal=init.goal)
        return velocity_rss(dataset, lambda: SfmPedestrian(params, d_ca=d_ca))

    x, rss = pattern_search(cost, x0, lo, hi)
    fitted = SfmParams(v0=float(x[0]), tau=float(x[1]), a_veh=float(x[2]),
                       b_veh=float(x[3]), goal=init.goal)
    return fitted, rss


def fit_mdp(dataset: TrajectoryDataset, template: MdpModel,
            bounds: dict[str, tuple[float, float]] | None = None) -> tuple[MdpModel, float]:
    """Search the reward scalars (goal reward, proximity penalty, step cost),
    re-solving the MDP per candidate; non-converging candidates cost +inf."""
    if not dataset.trajectories:
        raise TrajectoryError("cannot fit an empty dataset")
    b = dict(MDP_FIT_BOUNDS)
    if bounds:
        b.update(bounds)
    names = ("goal_reward", "proximity_penalty", "step_cost")
    lo = [b[n][0] for n in names]
    hi = [b[n][1] for n in names]
    x0 = [getattr(template, n) for n in names]

    def build(x) -> MdpModel:
        return mdp_solve(make_mdp_model(
            goal_reward=x[0], proximity_penalty=x[1], step_cost=x[2],
            gamma=template.gamma, pos_lo=template.pos_lo,
            pos_width=template.pos_width, n_pos=template.n_pos,
            vel_width=template.vel_width, n_vel=template.n_vel,
            gap_edges=template.gap_edges, dv=template.dv,
            dt_plan=template.dt_plan, d_ca=template.d_ca,
            goal_position=template.goal_position))

    def cost(x):
        try:
            model = build(x)
        except SolverError:
            return math.inf
        return velocity_rss(dataset, lambda: MdpPedestrian(model))

    x, rss = pattern_search(cost, x0, lo, hi)
    return build(x), rss


def rss_per_sample(rss: float, dataset: TrajectoryDataset) -> float:
    n = dataset.n_samples()
    return rss / n if n else math.inf


# ---------------------------------------------------------------------------
# Synthetic reference generation


def make_model_reference(kind: str, label: str, traj_id: str, duration: float = 8.0,
                         dt: float = 0.01, d0: float = -6.0, v0: float = 0.0,
                         sfm: SfmParams | None = None,
                         mdp: MdpModel | None = None) -> Trajectory:
    """Generate a synthetic reference trajectory from a walker model itself."""
    if kind == "sfm":
        driver = SfmPedestrian(sfm if sfm is not None else SfmParams())
    elif kind == "mdp":
        model = mdp if mdp is not None else mdp_solve(make_mdp_model())
        if not model.solved:
            model = mdp_solve(model)
        driver = MdpPedestrian(model)
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    n = int(round(duration / dt)) + 1
    d, v = rollout(driver, d0, v0, n, dt, label)
    t = np.arange(n) * dt
    return Trajectory(traj_id=traj_id, t=t, d_ped=d, v_ped=v, label=label, dt=dt)


def trajectory_from_trace(records, traj_id: str, label: str) -> Trajectory:
    """Re-emit an engine trace's pedestrian track as a trajectory."""
    if not records:
        raise TrajectoryError("empty trace")
    t = np.array([r.t for r in records])
    return Trajectory(traj_id=traj_id, t=t,
                      d_ped=np.array([r.d_ped for r in records]),
                      v_ped=np.array([r.v_ped for r in records]),
                      label=label, dt=float(t[1] - t[0]) if len(t) > 1 else 0.0)
