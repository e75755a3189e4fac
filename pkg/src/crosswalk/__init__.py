"""Intention-aware vehicle decision-making at an unsignalized crossing.

A deterministic fixed-step simulator around a white-box decision ladder,
interchangeable pedestrian models (social force, grid MDP, scripted, live
input), a particle-swarm parameter design framework, trajectory calibration,
a CLI, and a human-in-the-loop session server.
"""

from .decision import (DecisionOutput, DecisionParams, InteractionAnchor, Mode,
                       PedestrianObservation, VehicleState, accel_command,
                       can_veh_safe_cross, decide, discount_intention,
                       is_pedestrian_close_to_road, is_pedestrian_in_collision_area)
from .engine import (EventFlags, Geometry, ScenarioConfig, Simulation,
                     SimulationResult, TraceRecord, evaluate_events, run,
                     summarize, ttc, vehicle_step)
from .pedestrian import (MdpModel, PedestrianCommand, SfmParams, make_mdp_model,
                         mdp_solve, mdp_step, scripted_step, sfm_step)
from .tuner import ObjectiveWeights, PsoConfig, evaluate_params, objective, pso_run

__version__ = "0.1.0"
