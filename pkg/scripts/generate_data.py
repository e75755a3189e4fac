#!/usr/bin/env python3
"""Regenerate the packaged calibration reference CSVs.

The shipped references are synthetic: two are rollouts of the walker models
themselves (so refitting them recovers the generating parameters with near
zero residual), and one is the pedestrian track of a scripted engine run
(the ingestion round-trip fixture).  Run from the repository root:

    python scripts/generate_data.py
"""

from pathlib import Path

from crosswalk import calibration as cal
from crosswalk.config import load_scenario
from crosswalk.engine import run
from crosswalk.pedestrian import SfmParams, make_mdp_model, mdp_solve

DATA = Path(__file__).resolve().parent.parent / "src/crosswalk/data"


def main():
    out = DATA / "calibration"
    out.mkdir(parents=True, exist_ok=True)

    sfm = SfmParams()
    sfm_set = cal.TrajectoryDataset(trajectories=[
        cal.make_model_reference("sfm", "cross_first", "sfm_cross_first",
                                 duration=8.0, sfm=sfm),
        cal.make_model_reference("sfm", "yield", "sfm_yield",
                                 duration=8.0, sfm=sfm),
    ])
    cal.write_trajectories(sfm_set, out / "ref_sfm.csv")

    mdp = mdp_solve(make_mdp_model())
    mdp_set = cal.TrajectoryDataset(trajectories=[
        cal.make_model_reference("mdp", "cross_first", "mdp_cross_first",
                                 duration=8.0, mdp=mdp),
        cal.make_model_reference("mdp", "yield", "mdp_yield",
                                 duration=8.0, mdp=mdp),
    ])
    cal.write_trajectories(mdp_set, out / "ref_mdp.csv")

    scenario1 = load_scenario(DATA / "scenarios/scenario1.cfg")
    result = run(scenario1)
    traj = cal.trajectory_from_trace(result.records[:600], "scripted_cross_first",
                                     "cross_first")
    cal.write_trajectories(cal.TrajectoryDataset(trajectories=[traj]),
                           out / "ref_scripted.csv")
    for name in ("ref_sfm.csv", "ref_mdp.csv", "ref_scripted.csv"):
        lines = (out / name).read_text().count("\n")
        print(f"wrote {out / name} ({lines} lines)")


if __name__ == "__main__":
    main()
