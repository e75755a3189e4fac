"""Automated design of the decision parameters with particle swarm search.

A candidate is the seven-vector (i_ped_h, i_ped_l, v_ped_h, v_ped_l,
k_veh_acc, k_veh_dec, k_disc).  Its cost is the summed global objective over
a small scenario suite simulated with the candidate installed; the suite is
built once per pedestrian model, so one design run per model yields one
parameter set per model for comparison.  Timeouts (mutual-yield standstills)
are penalized, invalid candidates are rejected with an infinite sentinel, and
the swarm is seeded with the hand baseline so the design never regresses
below it.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .decision import TUNED_PARAM_NAMES, DecisionParams
from .engine import ScenarioConfig, TraceRecord, run, separation
from .errors import ConfigError
from .pedestrian import MdpModel, SfmParams, make_mdp_model, mdp_solve

# Added to a candidate's cost for every suite scenario that times out.
P_DEADLOCK = 1e4

# Numeric guard used for the time-to-collision term of the objective.
OBJECTIVE_K_NUM = 1e-3
_TTC_FLOOR = 1e-9  # s, keeps 1/TTC finite at the conflict point


@dataclass(frozen=True, slots=True)
class ObjectiveWeights:
    k1: float = 1.0   # elapsed time
    k2: float = 1.0   # squared peak acceleration
    k3: float = 5.0   # minimum separation (rewarded)
    k4: float = 0.0   # inverse time-to-collision

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "k4"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ConfigError(f"objective weight {name} must be finite and >= 0")


def as_weights(weights) -> ObjectiveWeights:
    if isinstance(weights, ObjectiveWeights):
        return weights
    return ObjectiveWeights(*weights)


def objective(records: list[TraceRecord], weights, dt: float | None = None) -> float:
    """Discrete-time global objective over one trace.

    Per tick: k1 * t + k2 * (running max |a_veh|)^2 - k3 * |d_min| +
    k4 / TTC, summed and scaled by dt.  d_min is the minimum Euclidean
    separation over the whole run and enters every tick as a constant.
    """
    if not records:
        raise ValueError("objective needs a non-empty trace")
    w = as_weights(weights)
    if dt is None:
        if len(records) < 2:
            raise ValueError("cannot infer dt from a single record; pass dt")
        dt = records[1].t - records[0].t
    d_min = min(separation(r.d_veh, r.d_ped) for r in records)
    total = 0.0
    a_peak = 0.0
    for r in records:
        a = r.a_veh if r.a_veh >= 0.0 else -r.a_veh
        if a > a_peak:
            a_peak = a
        term = w.k1 * r.t + w.k2 * a_peak * a_peak - w.k3 * d_min
        if w.k4 != 0.0:
            t_col = abs(r.d_veh) / (r.v_veh + OBJECTIVE_K_NUM)
            term += w.k4 / (t_col if t_col > _TTC_FLOOR else _TTC_FLOOR)
        total += term
    return total * dt


def params_from_vector(vector, base: DecisionParams) -> DecisionParams:
    """Lift a seven-vector into a full parameter set on top of base.

    Raises ConfigError when the vector violates the parameter invariants."""
    values = {name: float(v) for name, v in zip(TUNED_PARAM_NAMES, vector)}
    return replace(base, **values)


def evaluate_params(candidate: DecisionParams, suite: list[ScenarioConfig],
                    weights) -> float:
    """Total objective of a candidate over the scenario suite.

    Each scenario runs with the candidate installed; timeouts add the
    deadlock penalty, simulation failures poison the candidate with +inf."""
    if not suite:
        raise ValueError("scenario suite must not be empty")
    w = as_weights(weights)
    total = 0.0
    for scenario in suite:
        cfg = replace(scenario, decision=candidate)
        try:
            result = run(cfg)
        except Exception:
            return math.inf
        total += objective(result.records, w, dt=cfg.dt)
        if result.timeout:
            total += P_DEADLOCK
    return total


def evaluate_vector(vector, base: DecisionParams, suite, weights) -> float:
    """Vector-level cost: invalid parameter combinations cost +inf."""
    try:
        candidate = params_from_vector(vector, base)
    except ConfigError:
        return math.inf
    return evaluate_params(candidate, suite, weights)


def _vector_cost_task(args):
    vector, base, suite, weights = args
    return evaluate_vector(vector, base, suite, weights)


# ---------------------------------------------------------------------------
# Particle swarm core


@dataclass
class PsoConfig:
    swarm_size: int = 30
    max_iters: int = 100
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    seed: int = 1

    def validate(self):
        if self.swarm_size < 1:
            raise ConfigError("swarm_size must be >= 1")
        if self.max_iters < 0:
            raise ConfigError("max_iters must be >= 0")
        for name, (lo, hi) in self.bounds.items():
            if not lo < hi:
                raise ConfigError(f"bounds for {name}: need low < high, got {lo} >= {hi}")

    def bound_arrays(self, names=TUNED_PARAM_NAMES) -> tuple[np.ndarray, np.ndarray]:
        missing = [n for n in names if n not in self.bounds]
        if missing:
            raise ConfigError(f"missing bounds for {missing}")
        lo = np.array([self.bounds[n][0] for n in names])
        hi = np.array([self.bounds[n][1] for n in names])
        return lo, hi


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_cost: float


def pso_minimize(cfg: PsoConfig, cost_fn=None, *, dim: int | None = None,
                 bounds: list[tuple[float, float]] | None = None,
                 warm_starts=(), eval_batch=None,
                 inspect=None) -> tuple[np.ndarray, float, list[float]]:
    """Global-best PSO over a box.

    Either pass explicit `bounds` (list of (lo, hi)) or leave them to
    cfg.bounds in canonical parameter order.  Evaluation goes through
    `eval_batch(list_of_vectors) -> list_of_costs` when given (the tuner
    plugs a process pool in there), else through cost_fn per vector.  The
    global best is the lowest-index minimum, so results do not depend on
    evaluation order.  `inspect(iteration, particles, gbest_cost)` is called
    after every update with Particle snapshots.  Returns (best position,
    best cost, per-iteration best-cost history including the initial swarm).
    """
    cfg.validate()
    if bounds is not None:
        lo = np.array([b[0] for b in bounds], dtype=float)
        hi = np.array([b[1] for b in bounds], dtype=float)
    else:
        lo, hi = cfg.bound_arrays()
    d = dim if dim is not None else len(lo)
    if eval_batch is None:
        if cost_fn is None:
            raise ValueError("need cost_fn or eval_batch")
        def eval_batch(vectors):  # noqa: F811 - default serial evaluation
            return [cost_fn(v) for v in vectors]

    rng = np.random.default_rng(cfg.seed)
    n = cfg.swarm_size
    x = rng.uniform(lo, hi, size=(n, d))
    for idx, ws in enumerate(warm_starts):
        if idx >= n:
            break
        x[idx] = np.clip(np.asarray(ws, dtype=float), lo, hi)
    v = np.zeros((n, d))

    costs = np.array(eval_batch([x[i] for i in range(n)]), dtype=float)
    pbest = x.copy()
    pbest_cost = costs.copy()
    g = int(np.argmin(pbest_cost))
    gbest = pbest[g].copy()
    gbest_cost = float(pbest_cost[g])
    history = [gbest_cost]

    def snapshot():
        return [Particle(position=x[i].copy(), velocity=v[i].copy(),
                         best_position=pbest[i].copy(),
                         best_cost=float(pbest_cost[i])) for i in range(n)]

    if inspect is not None:
        inspect(0, snapshot(), gbest_cost)
    for it in range(cfg.max_iters):
        r1 = rng.uniform(size=(n, d))
        r2 = rng.uniform(size=(n, d))
        v = (cfg.inertia * v + cfg.cognitive * r1 * (pbest - x)
             + cfg.social * r2 * (gbest - x))
        x = np.clip(x + v, lo, hi)
        costs = np.array(eval_batch([x[i] for i in range(n)]), dtype=float)
        better = costs < pbest_cost
        pbest[better] = x[better]
        pbest_cost[better] = costs[better]
        g = int(np.argmin(pbest_cost))
        if pbest_cost[g] < gbest_cost:
            gbest = pbest[g].copy()
            gbest_cost = float(pbest_cost[g])
        history.append(gbest_cost)
        if inspect is not None:
            inspect(it + 1, snapshot(), gbest_cost)
    return gbest, gbest_cost, history


def pso_run(cfg: PsoConfig, suite: list[ScenarioConfig], weights,
            base: DecisionParams | None = None, warm_start: bool = True,
            n_jobs: int | None = None) -> tuple[DecisionParams, list[float]]:
    """Design the seven decision parameters against a scenario suite.

    Particle evaluations within an iteration are independent and run on a
    process pool when n_jobs > 1.  With warm_start the hand baseline joins
    the initial swarm, so the designed cost never exceeds the baseline's.
    Returns the best parameter set and the best-cost history.
    """
    if base is None:
        base = DecisionParams()
    w = as_weights(weights)
    warm = [np.array(base.as_vector())] if warm_start else []
    jobs = n_jobs if n_jobs is not None else (os.cpu_count() or 1)
    jobs = max(1, min(jobs, cfg.swarm_size))

    if jobs == 1:
        best_x, _, history = pso_minimize(
            cfg, cost_fn=lambda vec: evaluate_vector(vec, base, suite, w),
            warm_starts=warm)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            def eval_batch(vectors):
                tasks = [(tuple(v), base, suite, w) for v in vectors]
                return list(pool.map(_vector_cost_task, tasks))
            best_x, _, history = pso_minimize(cfg, warm_starts=warm,
                                              eval_batch=eval_batch)
    return params_from_vector(best_x, base), history


# ---------------------------------------------------------------------------
# Design suites


def build_design_suite(pedestrian_model: str, base: DecisionParams | None = None,
                       sfm: SfmParams | None = None, mdp: MdpModel | None = None,
                       t_max: float = 25.0) -> list[ScenarioConfig]:
    """The two calibration interactions, driven by the chosen walker model.

    One scenario gives the pedestrian the time advantage (they cross first,
    the vehicle must wait), the other puts the vehicle at the crossing early
    (the pedestrian lets it through).  Most everyday encounters are a blend
    of these two.
    """
    if pedestrian_model not in ("sfm", "mdp"):
        raise ConfigError(f"design suites use 'sfm' or 'mdp', not {pedestrian_model!r}")
    base = base if base is not None else DecisionParams()
    common = dict(dt=0.01, t_max=t_max, decision=base, pedestrian_model=pedestrian_model)
    if pedestrian_model == "sfm":
        common["sfm"] = sfm if sfm is not None else SfmParams()
    else:
        model = mdp if mdp is not None else mdp_solve(make_mdp_model())
        if not model.solved:
            model = mdp_solve(model)
        common["mdp"] = model
    ped_first = ScenarioConfig(name=f"{pedestrian_model}_ped_first",
                               d_veh0=40.0, v_veh0=8.33,
                               d_ped0=-6.0, v_ped0=0.0, i_ped0=0.55, **common)
    veh_first = ScenarioConfig(name=f"{pedestrian_model}_veh_first",
                               d_veh0=14.0, v_veh0=8.33,
                               d_ped0=-6.0, v_ped0=0.0, i_ped0=0.2, **common)
    for cfg in (ped_first, veh_first):
        cfg.validate()
    return [ped_first, veh_first]


def rms_velocity_difference(a: list[TraceRecord], b: list[TraceRecord]) -> float:
    """RMS difference of the vehicle velocity traces over their common span."""
    n = min(len(a), len(b))
    if n == 0:
        raise ValueError("need non-empty traces")
    acc = 0.0
    for i in range(n):
        diff = a[i].v_veh - b[i].v_veh
        acc += diff * diff
    return math.sqrt(acc / n)
