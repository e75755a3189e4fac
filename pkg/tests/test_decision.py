"""Decision ladder: predicates, discounting, feedback laws, branch order."""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from crosswalk.decision import (A_MAX, A_MIN, DecisionParams, InteractionAnchor,
                                Mode, PedestrianObservation, VehicleState,
                                accel_command, can_veh_safe_cross, decide,
                                discount_intention, effective_intention,
                                is_pedestrian_close_to_road,
                                is_pedestrian_in_collision_area, update_anchor)
from crosswalk.errors import ConfigError


def obs(d=-20.0, v=0.0, i=0.0, t=0.0):
    return PedestrianObservation(d_ped=d, v_ped=v, i_ped_raw=i, t_obs=t)


def veh(d=40.0, v=8.33):
    return VehicleState(d_veh=d, v_veh=v)


def events(gone=False, crossed=False, veh_gone=False):
    return SimpleNamespace(ped_gone=gone, ped_crossed=crossed, veh_gone=veh_gone)


# ---------------------------------------------------------------------------
# Zone predicates


def test_near_zone_examples():
    assert is_pedestrian_close_to_road(0.0, 4.0) is True
    assert is_pedestrian_close_to_road(-4.0, 4.0) is False  # boundary is strict
    assert is_pedestrian_close_to_road(-3.9, 4.0) is True


def test_collision_area_examples():
    assert is_pedestrian_in_collision_area(0.0, 2.0) is True
    assert is_pedestrian_in_collision_area(2.0, 2.0) is False
    assert is_pedestrian_in_collision_area(-1.5, 2.0) is True


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_zone_predicates_reject_nonfinite(bad):
    with pytest.raises(ValueError):
        is_pedestrian_close_to_road(bad, 4.0)
    with pytest.raises(ValueError):
        is_pedestrian_in_collision_area(bad, 2.0)


def test_zone_predicates_match_inequality_oracle_on_grid():
    # 10^4 (d_ped, radius) pairs against the literal |d| < r check
    rng = np.random.default_rng(42)
    d_vals = rng.uniform(-10.0, 10.0, 100)
    r_vals = rng.uniform(0.1, 8.0, 100)
    for d in d_vals:
        for r in r_vals:
            expected = abs(d) < r
            assert is_pedestrian_close_to_road(float(d), float(r)) == expected
            assert is_pedestrian_in_collision_area(float(d), float(r)) == expected


# ---------------------------------------------------------------------------
# Intention discounting


def test_discount_examples():
    assert discount_intention(0.55, 3.7, 0.0) == 0.55           # 0.9^0 = 1
    assert discount_intention(0.55, 1.0, 2.0) == pytest.approx(0.4455, abs=1e-12)
    assert discount_intention(0.0, 1.0, 10.0) == 0.0


def test_discount_rejects_negative_elapsed():
    with pytest.raises(ValueError):
        discount_intention(0.5, 1.0, -0.001)


def test_discount_rejects_out_of_range_intention():
    with pytest.raises(ValueError):
        discount_intention(1.2, 1.0, 0.0)


def test_discount_strictly_decreasing_and_bounded():
    rng = np.random.default_rng(7)
    for _ in range(200):
        i0 = float(rng.uniform(0.01, 1.0))
        k = float(rng.uniform(0.01, 3.0))
        ts = np.sort(rng.uniform(0.0, 60.0, 8))
        vals = [discount_intention(i0, k, float(t)) for t in ts]
        for a, b in zip(vals, vals[1:]):
            assert b < a
        assert all(0.0 <= v <= i0 for v in vals)


# ---------------------------------------------------------------------------
# Feedback laws


def test_accel_command_at_setpoints():
    p = DecisionParams()
    assert accel_command(Mode.CROSSING, p.v_veh_d, p) == 0.0
    assert accel_command(Mode.STOPPING, 0.0, p) == 0.0


def test_accel_command_crossing_law():
    p = DecisionParams(k_veh_acc=0.5, v_veh_d=8.0)
    # raw proportional law, checked with the clamp out of the way
    assert accel_command(Mode.CROSSING, 0.0, p, a_max=math.inf) == 4.0
    # under the physical envelope the same command saturates
    assert accel_command(Mode.CROSSING, 0.0, p) == A_MAX


def test_accel_command_clamps_and_signs():
    p = DecisionParams(k_veh_dec=2.0)
    assert accel_command(Mode.STOPPING, 10.0, p) == A_MIN
    rng = np.random.default_rng(3)
    for _ in range(300):
        v = float(rng.uniform(0.0, 14.0))
        a_stop = accel_command(Mode.STOPPING, v, p)
        assert a_stop <= 0.0
        a_go = accel_command(Mode.CROSSING, v, p, a_max=math.inf)
        assert a_go <= p.k_veh_acc * p.v_veh_d + 1e-12


# ---------------------------------------------------------------------------
# Gap test


def test_safe_cross_false_inside_collision_area():
    p = DecisionParams()
    assert can_veh_safe_cross(veh(0.5, 8.0), obs(d=-1.0, v=0.0), p) is False


def test_safe_cross_examples_match_formula():
    p = DecisionParams(k_num=1e-3)
    # vehicle about to clear, pedestrian far: 0.5625 s * 1.5 < 12 s
    assert can_veh_safe_cross(veh(0.5, 8.0), obs(d=-20.0, v=1.5), p) is True
    # slow distant vehicle, pedestrian one meter out: 25.5 s > 0.67 s
    assert can_veh_safe_cross(veh(30.0, 2.0), obs(d=-3.0, v=1.5), p) is False

    def oracle(d_veh, v_veh, d_ped, v_ped):
        if abs(d_ped) < p.d_ca:
            return False
        t_clear = (d_veh + 4.0) / (v_veh + p.k_num)
        t_arrive = max(0.0, abs(d_ped) - p.d_ca) / max(v_ped, 0.1)
        return t_clear * 1.5 < t_arrive

    rng = np.random.default_rng(11)
    for _ in range(500):
        dv = float(rng.uniform(-5.0, 60.0))
        vv = float(rng.uniform(0.0, 12.0))
        dp = float(rng.uniform(-12.0, 12.0))
        vp = float(rng.uniform(0.0, 3.0))
        assert can_veh_safe_cross(veh(dv, vv), obs(d=dp, v=vp), p) == oracle(dv, vv, dp, vp)


# ---------------------------------------------------------------------------
# Interaction anchor


def test_anchor_starts_on_near_zone_or_intention():
    p = DecisionParams()
    assert update_anchor(None, obs(d=-10.0, v=1.0, i=0.0, t=1.0), p) is None
    a = update_anchor(None, obs(d=-3.0, v=1.0, i=0.0, t=2.0), p)
    assert a == InteractionAnchor(t0=2.0, i_raw_t0=0.0)
    b = update_anchor(None, obs(d=-10.0, v=0.0, i=p.i_ped_l, t=3.0), p)
    assert b == InteractionAnchor(t0=3.0, i_raw_t0=p.i_ped_l)


def test_anchor_resets_on_renewed_intention():
    p = DecisionParams()
    a = InteractionAnchor(t0=1.0, i_raw_t0=0.4)
    assert update_anchor(a, obs(i=0.5, t=5.0), p) is a          # +0.1 is not enough
    renewed = update_anchor(a, obs(i=0.51, t=5.0), p)
    assert renewed == InteractionAnchor(t0=5.0, i_raw_t0=0.51)


def test_effective_intention_uses_anchored_value():
    p = DecisionParams(k_disc=1.0)
    a = InteractionAnchor(t0=2.0, i_raw_t0=0.8)
    got = effective_intention(a, obs(i=0.3, t=4.0), p)
    assert got == pytest.approx(0.8 * 0.81, abs=1e-12)
    assert effective_intention(None, obs(i=0.3, t=4.0), p) == 0.3


# ---------------------------------------------------------------------------
# The decision ladder


def test_decide_far_pedestrian_crosses():
    p = DecisionParams()
    out = decide(veh(40.0, 8.33), obs(d=-20.0, v=0.0, i=0.0), p, None, events())
    assert out.mode is Mode.CROSSING


def test_decide_collision_area_stops_before_everything():
    p = DecisionParams()
    # unsafe gap AND occupied collision area: the occupancy branch wins
    out = decide(veh(30.0, 2.0), obs(d=-1.0, v=0.0, i=0.0), p, None, events())
    assert out.mode is Mode.STOPPING
    assert out.predicates.ped_in_collision_area is True
    assert out.a_veh_des <= 0.0


def test_decide_near_zone_moving_pedestrian_stops():
    p = DecisionParams()
    out = decide(veh(30.0, 2.0), obs(d=-3.0, v=1.5, i=0.0), p, None, events())
    assert out.mode is Mode.STOPPING
    assert out.predicates.ped_close_and_moving is True


def test_decide_decayed_intention_releases():
    # stationary pedestrian outside the near zone, intention decayed below
    # the lower threshold: every stopping branch fails
    p = DecisionParams(k_disc=1.0)
    anchor = InteractionAnchor(t0=0.0, i_raw_t0=0.9)
    t = math.log(p.i_ped_l / 0.9) / (p.k_disc * math.log(0.9)) + 1e-6
    out = decide(veh(30.0, 2.0), obs(d=-4.5, v=0.0, i=0.9, t=t), p, anchor, events())
    assert out.i_ped_eff < p.i_ped_l
    assert out.mode is Mode.CROSSING


def test_decide_done_after_completion_tracks_cruise():
    p = DecisionParams()
    out = decide(veh(10.0, 2.0), obs(d=11.0, v=1.5, i=0.5), p, None,
                 events(gone=True, crossed=True))
    assert out.mode is Mode.DONE
    assert out.a_veh_des == pytest.approx(
        min(A_MAX, p.k_veh_acc * (p.v_veh_d - 2.0)))


def _ladder_oracle(safe, in_ca, gone, close, v_ped, i_eff, p):
    # literal transcription of the controller's conditional ladder
    if not safe:
        if in_ca:
            return Mode.STOPPING
        elif gone:
            return Mode.CROSSING
        elif close and v_ped > 0:
            return Mode.STOPPING
        elif v_ped > p.v_ped_h or i_eff > p.i_ped_h:
            return Mode.STOPPING
        elif p.v_ped_l < v_ped < p.v_ped_h and p.i_ped_l < i_eff < p.i_ped_h:
            return Mode.STOPPING
        else:
            return Mode.CROSSING
    else:
        return Mode.CROSSING


def test_decide_matches_branch_enumeration_oracle():
    p = DecisionParams()
    rng = np.random.default_rng(19)
    for _ in range(2000):
        d_veh = float(rng.uniform(-6.0, 60.0))
        v_veh = float(rng.uniform(0.0, 12.0))
        d_ped = float(rng.uniform(-12.0, 12.0))
        v_ped = float(rng.uniform(0.0, 3.0))
        i_raw = float(rng.uniform(0.0, 1.0))
        o = obs(d=d_ped, v=v_ped, i=i_raw, t=0.0)
        ev = events(gone=d_ped > p.d_ca)
        out = decide(veh(d_veh, v_veh), o, p, None, ev)

        safe = (abs(d_ped) >= p.d_ca
                and ((d_veh + 4.0) / (v_veh + p.k_num)) * 1.5
                < max(0.0, abs(d_ped) - p.d_ca) / max(v_ped, 0.1))
        expected = _ladder_oracle(safe, abs(d_ped) < p.d_ca, d_ped > p.d_ca,
                                  abs(d_ped) < p.d_nz, v_ped, i_raw, p)
        assert out.mode is expected
        assert out.mode in (Mode.CROSSING, Mode.STOPPING)  # exactly one mode


def test_decide_deadlock_freedom_release_time():
    # for a standing pedestrian outside the collision area the hold releases
    # once the discounted intention drops below the lower threshold
    rng = np.random.default_rng(23)
    for _ in range(50):
        p = DecisionParams(k_disc=float(rng.uniform(0.1, 2.0)))
        i0 = float(rng.uniform(p.i_ped_l + 0.05, 1.0))
        anchor = InteractionAnchor(t0=0.0, i_raw_t0=i0)
        t_star = math.log(p.i_ped_l / i0) / (p.k_disc * math.log(0.9))
        vehicle = veh(40.0, 2.0)  # far and slow: the gap test stays false
        before = decide(vehicle, obs(d=-2.5, v=0.0, i=i0, t=max(0.0, t_star - 1e-3)),
                        p, anchor, events())
        after = decide(vehicle, obs(d=-2.5, v=0.0, i=i0, t=t_star + 1e-6),
                       p, anchor, events())
        assert before.mode is Mode.STOPPING
        assert after.mode is Mode.CROSSING


def test_decide_is_pure():
    p = DecisionParams()
    a = InteractionAnchor(t0=0.5, i_raw_t0=0.6)
    args = (veh(25.0, 6.0), obs(d=-3.2, v=1.1, i=0.6, t=2.0), p, a, events())
    assert decide(*args) == decide(*args)


# ---------------------------------------------------------------------------
# Parameter validation


@pytest.mark.parametrize("kwargs", [
    {"i_ped_l": 0.8, "i_ped_h": 0.7},
    {"v_ped_l": 2.5, "v_ped_h": 2.0},
    {"k_veh_acc": 0.0},
    {"k_veh_dec": -1.0},
    {"k_disc": -0.1},
    {"d_ca": 5.0, "d_nz": 4.0},
    {"v_veh_d": 0.0},
    {"k_num": 0.0},
    {"i_ped_h": 1.5},
])
def test_invalid_params_raise_config_error(kwargs):
    with pytest.raises(ConfigError):
        DecisionParams(**kwargs)
