"""Command-line entry point: simulate / tune / calibrate / replay / serve.

Exit codes: 0 success, 1 usage or configuration error, 2 domain outcome
flag (a run that ended in the deadlock timeout).  All outputs are plain
files (CSV, JSON, config fragments) without timestamps, so fixed seeds give
byte-identical results across runs.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import calibration as cal
from . import config as cfgmod
from . import engine, tuner
from .decision import DecisionParams
from .errors import ConfigError, SolverError, TrajectoryError
from .pedestrian import SfmParams, make_mdp_model

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def cmd_simulate(args) -> int:
    overrides = list(args.set or [])
    if args.model is not None:
        overrides.append(f"pedestrian.model={args.model}")
    if args.seed is not None:
        overrides.append(f"sim.seed={args.seed}")
    config = cfgmod.load_scenario(args.config, overrides=overrides,
                                  params_path=args.params)
    result = engine.run(config)
    out = _out_dir(args.out)
    engine.write_trace_csv(result.records, out / "trace.csv")
    engine.write_trace_jsonl(result.records, out / "trace.jsonl")
    summary = engine.summarize(result)
    summary["objective_j"] = tuner.objective(result.records,
                                             tuner.ObjectiveWeights(), dt=config.dt)
    _write_json(out / "summary.json", summary)
    print(f"{config.name}: {summary['outcome']} after {summary['ticks']} ticks "
          f"({summary['crossing_order']}), trace -> {out / 'trace.csv'}")
    return EXIT_DOMAIN if result.timeout else EXIT_OK


def _comparison_scenarios() -> list[engine.ScenarioConfig]:
    """The two scripted reference interactions used to compare designs."""
    normal = engine.ScenarioConfig(
        name="normal_crossing", d_veh0=40.0, v_veh0=8.33, d_ped0=-6.0,
        v_ped0=1.5, i_ped0=0.55, pedestrian_model="scripted",
        script=[(0.0, 1.5, 0.55)])
    unexpected = engine.ScenarioConfig(
        name="unexpected_stop", d_veh0=40.0, v_veh0=8.33, d_ped0=-6.0,
        v_ped0=2.2, i_ped0=0.2, pedestrian_model="scripted",
        script=[(0.0, 2.2, 0.2), (1.2, 0.0, 0.2)])
    return [normal, unexpected]


def cmd_tune(args) -> int:
    spec = cfgmod.load_tuning_config(args.config, overrides={
        "swarm": args.swarm, "iterations": args.iterations, "seed": args.seed})
    base = DecisionParams()
    pso_cfg = tuner.PsoConfig(swarm_size=spec.swarm, max_iters=spec.iterations,
                              inertia=spec.inertia, cognitive=spec.cognitive,
                              social=spec.social, bounds=dict(spec.bounds),
                              seed=spec.seed)
    pso_cfg.validate()
    out = _out_dir(args.out)
    if spec.suite_paths:
        kinds = ("custom",)  # one design against the user-supplied suite
    else:
        kinds = ("sfm", "mdp") if args.model in (None, "both") else (args.model,)

    designed: dict[str, DecisionParams] = {}
    report: dict = {"models": {}}
    for kind in kinds:
        if spec.suite_paths:
            suite = [cfgmod.load_scenario(p) for p in spec.suite_paths]
        else:
            suite = tuner.build_design_suite(kind, base, t_max=spec.t_max)
        t0 = time.perf_counter()
        best, history = tuner.pso_run(pso_cfg, suite, spec.weights, base=base,
                                      n_jobs=args.jobs)
        elapsed = time.perf_counter() - t0
        baseline_cost = tuner.evaluate_params(base, suite, spec.weights)
        cfgmod.write_params_file(best, out / f"params_{kind}.cfg",
                                 meta={"model": kind, "best_cost": repr(history[-1]),
                                       "baseline_cost": repr(baseline_cost),
                                       "iterations": spec.iterations,
                                       "swarm": spec.swarm, "seed": spec.seed})
        with open(out / f"history_{kind}.csv", "w", encoding="utf-8") as fh:
            fh.write("iteration,best_cost\n")
            for i, c in enumerate(history):
                fh.write(f"{i},{c!r}\n")
        designed[kind] = best
        report["models"][kind] = {"best_cost": history[-1],
                                  "baseline_cost": baseline_cost,
                                  "tune_seconds": round(elapsed, 3)}
        print(f"{kind}: designed cost {history[-1]:.3f} "
              f"(baseline {baseline_cost:.3f}) in {elapsed:.1f}s")

    if len(designed) == 2:
        comparison = {}
        for scenario in _comparison_scenarios():
            traces = {k: engine.run(replace(scenario, decision=p)).records
                      for k, p in designed.items()}
            rms = tuner.rms_velocity_difference(traces["sfm"], traces["mdp"])
            comparison[scenario.name] = {"rms_v_veh_difference": rms}
            print(f"{scenario.name}: RMS v_veh difference between designs "
                  f"= {rms:.4f} m/s")
        report["comparison"] = comparison
    _write_json(out / "tuning_report.json", report)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    dataset = cal.load_trajectories(args.data)
    out = _out_dir(args.out)
    report: dict = {"data": str(args.data), "n_samples": dataset.n_samples(),
                    "n_trajectories": len(dataset.trajectories)}
    if args.model == "sfm":
        fitted, rss = cal.fit_sfm(dataset, SfmParams())
        lines = ["[pedestrian.sfm]"]
        for key in ("v0", "tau", "a_veh", "b_veh", "goal"):
            lines.append(f"{key} = {getattr(fitted, key)!r}")
        report["params"] = {k: getattr(fitted, k)
                            for k in ("v0", "tau", "a_veh", "b_veh", "goal")}
    elif args.model == "mdp":
        fitted, rss = cal.fit_mdp(dataset, make_mdp_model())
        lines = ["[pedestrian.mdp]"]
        for key in ("goal_reward", "proximity_penalty", "step_cost", "gamma"):
            lines.append(f"{key} = {getattr(fitted, key)!r}")
        report["params"] = {k: getattr(fitted, k)
                            for k in ("goal_reward", "proximity_penalty",
                                      "step_cost", "gamma")}
    else:
        raise ConfigError(f"calibrate supports sfm or mdp, not {args.model!r}")
    report["rss"] = rss
    report["rss_per_sample"] = cal.rss_per_sample(rss, dataset)
    (out / f"fitted_{args.model}.cfg").write_text("\n".join(lines) + "\n",
                                                  encoding="utf-8")
    _write_json(out / f"rss_report_{args.model}.json", report)
    print(f"fitted {args.model}: rss={rss:.3e} "
          f"({report['rss_per_sample']:.3e} per sample)")
    return EXIT_OK


def cmd_replay(args) -> int:
    records = engine.read_trace_csv(args.trace)
    dt = records[1].t - records[0].t if len(records) > 1 else 0.0
    for record in records:
        sys.stdout.write(
            json.dumps(engine.record_to_state_dict(record), sort_keys=True) + "\n")
        if args.pace and args.pace > 0 and dt > 0:
            time.sleep(dt / args.pace)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    app = create_app(scenario_dir=args.scenarios)
    if args.ui:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=args.ui, html=True), name="ui")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crosswalk",
        description="Intention-aware crossing simulator and design tools")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario and write its trace")
    sim.add_argument("--config", required=True, help="scenario config file")
    sim.add_argument("--params", help="decision-parameter file to merge (tuner output)")
    sim.add_argument("--out", default="out", help="output directory")
    sim.add_argument("--model", choices=("sfm", "mdp", "scripted"),
                     help="override the scenario's pedestrian model")
    sim.add_argument("--seed", type=int, help="override the scenario seed")
    sim.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                     help="override any config scalar (repeatable)")
    sim.set_defaults(func=cmd_simulate)

    tune = sub.add_parser("tune", help="design decision parameters with PSO")
    tune.add_argument("--config", help="tuning config file (bounds, weights, suite)")
    tune.add_argument("--out", default="out", help="output directory")
    tune.add_argument("--model", choices=("sfm", "mdp", "both"), default="both")
    tune.add_argument("--iterations", type=int, help="PSO iterations")
    tune.add_argument("--swarm", type=int, help="swarm size")
    tune.add_argument("--seed", type=int, help="PSO seed")
    tune.add_argument("--jobs", type=int, help="parallel evaluation processes")
    tune.set_defaults(func=cmd_tune)

    calib = sub.add_parser("calibrate", help="fit a walker model to trajectory data")
    calib.add_argument("--data", required=True, help="trajectory CSV")
    calib.add_argument("--model", choices=("sfm", "mdp"), required=True)
    calib.add_argument("--out", default="out", help="output directory")
    calib.set_defaults(func=cmd_calibrate)

    rep = sub.add_parser("replay", help="re-emit a stored trace tick by tick")
    rep.add_argument("--trace", required=True, help="trace CSV file")
    rep.add_argument("--pace", type=float, default=0.0,
                     help="sim-seconds per wall-second (0 = no pacing)")
    rep.set_defaults(func=cmd_replay)

    srv = sub.add_parser("serve", help="run the human-in-the-loop session server")
    srv.add_argument("--scenarios", help="directory of scenario configs")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--ui", help="static directory with the browser UI build")
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TrajectoryError, SolverError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
