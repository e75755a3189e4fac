"""White-box intention-aware crossing decision for an automated vehicle.

The controller negotiates an unsignalized pedestrian crossing with a single
pedestrian.  It is a fixed ladder of readable predicates over the pedestrian's
position, speed and (exponentially discounted) crossing intention, and emits a
longitudinal acceleration command through one of two proportional feedback
laws.  Everything here is a pure function over value inputs: no shared state,
safe to call from any thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError

# Physical acceleration envelope (comfortable urban driving).
A_MIN = -4.0   # m/s^2
A_MAX = 2.5    # m/s^2

# Gap test tuning: the vehicle only takes a gap when it clears the corridor
# with this much margin before the pedestrian can reach it.
SAFETY_FACTOR = 1.5
PED_SPEED_FLOOR = 0.1      # m/s, keeps the arrival-time estimate finite
DEFAULT_L_CORRIDOR = 4.0   # m, length of the conflict corridor along the road

# Base of the intention decay: used intention is i0 * 0.9^(k_disc * elapsed).
DISCOUNT_BASE = 0.9

# A raw-intention jump this far above the anchored value restarts the
# interaction clock (the pedestrian has visibly renewed their attempt).
INTENTION_RENEWAL_DELTA = 0.1


class Mode(str, Enum):
    CROSSING = "Crossing"
    STOPPING = "Stopping"
    DONE = "Done"


@dataclass(frozen=True, slots=True)
class PedestrianObservation:
    """One pedestrian sample as seen by the controller.

    d_ped is the signed distance to the centerline of the vehicle path
    (negative on the approach side, positive past it); v_ped is the crossing
    speed (>= 0, toward/through the road); i_ped_raw is the externally
    estimated crossing intention in [0, 1]; t_obs is simulation time.
    """

    d_ped: float
    v_ped: float
    i_ped_raw: float
    t_obs: float


@dataclass(slots=True)
class VehicleState:
    """Longitudinal vehicle state relative to the conflict point.

    d_veh decreases as the vehicle approaches and goes negative once the
    front passes the conflict point; v_veh never goes negative.
    """

    d_veh: float
    v_veh: float
    a_veh: float = 0.0


@dataclass(frozen=True, slots=True)
class DecisionParams:
    """Tunable parameter set of the decision ladder.

    i_ped_h/i_ped_l and v_ped_h/v_ped_l are the intention and speed
    thresholds, k_veh_acc/k_veh_dec the feedback gains, k_disc the intention
    discount rate.  Those seven are the design-framework search space.  The
    zone radii d_nz/d_ca, the cruise setpoint v_veh_d and the numeric guard
    k_num complete the set.

    Note v_ped_l may be negative: since observed speeds are never negative, a
    negative lower threshold keeps the moderate-intention hold active for a
    standing pedestrian, so release then comes from the intention decay alone.
    """

    i_ped_h: float = 0.7
    i_ped_l: float = 0.25
    v_ped_h: float = 2.0
    v_ped_l: float = -0.1
    k_veh_acc: float = 1.2
    k_veh_dec: float = 1.0
    k_disc: float = 0.5
    d_nz: float = 4.0
    d_ca: float = 2.0
    v_veh_d: float = 8.33
    k_num: float = 1e-3

    def __post_init__(self):
        if not all(map(math.isfinite, (
                self.i_ped_h, self.i_ped_l, self.v_ped_h, self.v_ped_l,
                self.k_veh_acc, self.k_veh_dec, self.k_disc,
                self.d_nz, self.d_ca, self.v_veh_d, self.k_num))):
            raise ConfigError("decision parameters must be finite")
        if not self.i_ped_l < self.i_ped_h:
            raise ConfigError(f"need i_ped_l < i_ped_h, got {self.i_ped_l} >= {self.i_ped_h}")
        if not (0.0 <= self.i_ped_l <= 1.0 and 0.0 <= self.i_ped_h <= 1.0):
            raise ConfigError("intention thresholds must lie in [0, 1]")
        if not self.v_ped_l < self.v_ped_h:
            raise ConfigError(f"need v_ped_l < v_ped_h, got {self.v_ped_l} >= {self.v_ped_h}")
        if self.k_veh_acc <= 0 or self.k_veh_dec <= 0:
            raise ConfigError("feedback gains must be strictly positive")
        if self.k_disc < 0:
            raise ConfigError("k_disc must be >= 0")
        if not 0 < self.d_ca < self.d_nz:
            raise ConfigError(f"need 0 < d_ca < d_nz, got d_ca={self.d_ca}, d_nz={self.d_nz}")
        if self.v_veh_d <= 0:
            raise ConfigError("v_veh_d must be > 0")
        if self.k_num <= 0:
            raise ConfigError("k_num must be > 0")

    def as_vector(self) -> tuple[float, ...]:
        """The seven tuned parameters, in their canonical search order."""
        return (self.i_ped_h, self.i_ped_l, self.v_ped_h, self.v_ped_l,
                self.k_veh_acc, self.k_veh_dec, self.k_disc)


#: Canonical order of the tuned parameters in vectors, bounds and files.
TUNED_PARAM_NAMES = ("i_ped_h", "i_ped_l", "v_ped_h", "v_ped_l",
                     "k_veh_acc", "k_veh_dec", "k_disc")


@dataclass(frozen=True, slots=True)
class BranchPredicates:
    """The six branch guards of the decision ladder, in evaluation order."""

    can_veh_safe_cross: bool
    ped_in_collision_area: bool
    ped_gone_through: bool
    ped_close_and_moving: bool
    ped_fast_or_intent_high: bool
    ped_hesitant_band: bool


@dataclass(frozen=True, slots=True)
class DecisionOutput:
    mode: Mode
    a_veh_des: float
    predicates: BranchPredicates
    i_ped_eff: float


@dataclass(frozen=True, slots=True)
class InteractionAnchor:
    """Start of the current vehicle-pedestrian interaction.

    Holds the time the interaction began and the raw intention observed then;
    the discount law decays that anchored value, not the live signal.
    """

    t0: float
    i_raw_t0: float


def is_pedestrian_close_to_road(d_ped: float, d_nz: float) -> bool:
    """Near-zone membership: strictly |d_ped| < d_nz."""
    if not (math.isfinite(d_ped) and math.isfinite(d_nz)):
        raise ValueError("non-finite input to near-zone predicate")
    if d_nz <= 0:
        raise ValueError("d_nz must be > 0")
    return -d_nz < d_ped < d_nz


def is_pedestrian_in_collision_area(d_ped: float, d_ca: float) -> bool:
    """Collision-area membership: strictly |d_ped| < d_ca."""
    if not (math.isfinite(d_ped) and math.isfinite(d_ca)):
        raise ValueError("non-finite input to collision-area predicate")
    if d_ca <= 0:
        raise ValueError("d_ca must be > 0")
    return -d_ca < d_ped < d_ca


def discount_intention(i_ped_t0: float, k_disc: float, t_elapsed: float) -> float:
    """Intention actually used by the controller, i0 * 0.9^(k_disc * elapsed).

    Strictly decreasing in elapsed time for k_disc > 0 and i0 > 0, which is
    what guarantees a waiting vehicle eventually proceeds after a false
    positive intention estimate.
    """
    if t_elapsed < 0:
        raise ValueError(f"t_elapsed must be >= 0, got {t_elapsed}")
    if not 0.0 <= i_ped_t0 <= 1.0:
        raise ValueError(f"intention must lie in [0, 1], got {i_ped_t0}")
    return i_ped_t0 * math.pow(DISCOUNT_BASE, k_disc * t_elapsed)


def accel_command(mode: Mode, v_veh: float, params: DecisionParams,
                  a_min: float = A_MIN, a_max: float = A_MAX) -> float:
    """Proportional speed-tracking command for the given mode, clamped.

    Crossing (and Done) tracks the cruise setpoint with the acceleration
    gain; Stopping tracks zero with the separate deceleration gain.
    """
    if v_veh < 0:
        raise ValueError("v_veh must be >= 0")
    if mode is Mode.STOPPING:
        a = params.k_veh_dec * (0.0 - v_veh)
    else:
        a = params.k_veh_acc * (params.v_veh_d - v_veh)
    if a < a_min:
        return a_min
    if a > a_max:
        return a_max
    return a


def can_veh_safe_cross(veh: VehicleState, ped: PedestrianObservation,
                       params: DecisionParams,
                       l_corridor: float = DEFAULT_L_CORRIDOR) -> bool:
    """Gap test: can the vehicle clear the corridor before the pedestrian
    can possibly reach it?

    Compares the vehicle's corridor-clearing time (scaled by the safety
    factor) against the pedestrian's earliest arrival at the collision-area
    boundary.  A pedestrian already inside the collision area makes the
    answer no regardless of timing.
    """
    d_ped = ped.d_ped
    if -params.d_ca < d_ped < params.d_ca:
        return False
    t_veh_clear = (veh.d_veh + l_corridor) / (veh.v_veh + params.k_num)
    gap_to_area = abs(d_ped) - params.d_ca
    if gap_to_area < 0.0:
        gap_to_area = 0.0
    speed = ped.v_ped if ped.v_ped > PED_SPEED_FLOOR else PED_SPEED_FLOOR
    t_ped_arrive = gap_to_area / speed
    return t_veh_clear * SAFETY_FACTOR < t_ped_arrive


def update_anchor(anchor: InteractionAnchor | None, ped: PedestrianObservation,
                  params: DecisionParams) -> InteractionAnchor | None:
    """Advance the interaction anchor for a new observation.

    The interaction begins at the first sample where the pedestrian is inside
    the near zone or the raw intention reaches the lower threshold.  A later
    raw-intention jump of more than INTENTION_RENEWAL_DELTA above the anchored
    value restarts the clock, so discounting cannot override a genuinely
    renewed crossing attempt.
    """
    if anchor is None:
        if ped.i_ped_raw >= params.i_ped_l or is_pedestrian_close_to_road(ped.d_ped, params.d_nz):
            return InteractionAnchor(t0=ped.t_obs, i_raw_t0=ped.i_ped_raw)
        return None
    if ped.i_ped_raw > anchor.i_raw_t0 + INTENTION_RENEWAL_DELTA:
        return InteractionAnchor(t0=ped.t_obs, i_raw_t0=ped.i_ped_raw)
    return anchor


def effective_intention(anchor: InteractionAnchor | None,
                        ped: PedestrianObservation, params: DecisionParams) -> float:
    """Discounted intention for the current tick (raw value before t0)."""
    if anchor is None:
        return ped.i_ped_raw
    return discount_intention(anchor.i_raw_t0, params.k_disc, ped.t_obs - anchor.t0)


def decide(veh: VehicleState, ped: PedestrianObservation, params: DecisionParams,
           anchor: InteractionAnchor | None, events,
           l_corridor: float = DEFAULT_L_CORRIDOR) -> DecisionOutput:
    """One pass of the decision ladder.

    `events` carries the engine-evaluated completion flags (attributes
    ped_gone, ped_crossed, veh_gone); the zone predicates are recomputed here
    from the fresh observation.  Branches are checked in a fixed order: take
    the gap if it is safe; hard-stop while the collision area is occupied;
    proceed once the pedestrian has gone through; yield to a pedestrian
    approaching inside the near zone; yield to a fast or visibly determined
    pedestrian; hold for a hesitant one (moderate speed band and
    mid-band discounted intention); otherwise cross.  Once either party has
    fully gone through, the decision is Done and tracks the cruise setpoint.
    """
    i_eff = effective_intention(anchor, ped, params)

    safe = can_veh_safe_cross(veh, ped, params, l_corridor)
    in_ca = is_pedestrian_in_collision_area(ped.d_ped, params.d_ca)
    gone = events.ped_gone
    close_moving = is_pedestrian_close_to_road(ped.d_ped, params.d_nz) and ped.v_ped > 0.0
    fast_or_high = ped.v_ped > params.v_ped_h or i_eff > params.i_ped_h
    hesitant = (params.v_ped_l < ped.v_ped < params.v_ped_h
                and params.i_ped_l < i_eff < params.i_ped_h)
    preds = BranchPredicates(safe, in_ca, gone, close_moving, fast_or_high, hesitant)

    if events.veh_gone or events.ped_crossed:
        mode = Mode.DONE
    elif safe:
        mode = Mode.CROSSING
    elif in_ca:
        mode = Mode.STOPPING
    elif gone:
        mode = Mode.CROSSING
    elif close_moving:
        mode = Mode.STOPPING
    elif fast_or_high:
        mode = Mode.STOPPING
    elif hesitant:
        mode = Mode.STOPPING
    else:
        mode = Mode.CROSSING

    return DecisionOutput(mode=mode, a_veh_des=accel_command(mode, veh.v_veh, params),
                          predicates=preds, i_ped_eff=i_eff)
