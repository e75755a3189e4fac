"""Scenario and tuning configuration files.

Plain INI text: key = value pairs grouped in nested sections ([pedestrian]
with [pedestrian.script], [pedestrian.sfm], [pedestrian.mdp] below it).  The
same format carries tuner-produced decision-parameter files, so designed
parameters load straight back into the engine.  Dotted-key overrides
("decision.k_disc=0") address any scalar in the tree.

Scenario schema (all keys optional, defaults shown in DEFAULTS below)::

    [sim]        dt, t_max, seed
    [geometry]   d_nz, d_ca, l_corridor, crossing_length
    [vehicle]    d0, v0
    [pedestrian] model (scripted|sfm|mdp|external), d0, v0, i0
    [pedestrian.script]  points = multiline "t v i" rows
    [pedestrian.sfm]     v0, tau, a_veh, b_veh, goal
    [pedestrian.mdp]     goal_reward, proximity_penalty, step_cost, gamma
    [decision]   i_ped_h, i_ped_l, v_ped_h, v_ped_l, k_veh_acc, k_veh_dec,
                 k_disc, v_veh_d, k_num

The decision zone radii are geometry and live only in [geometry]; the loader
copies them into the decision parameter set so both views always agree.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

from .decision import TUNED_PARAM_NAMES, DecisionParams
from .engine import Geometry, ScenarioConfig
from .errors import ConfigError
from .pedestrian import SfmParams, make_mdp_model

_FLOAT, _INT, _STR, _POINTS = "float", "int", "str", "points"

SCENARIO_SCHEMA = {
    "sim": {"dt": _FLOAT, "t_max": _FLOAT, "seed": _INT},
    "geometry": {"d_nz": _FLOAT, "d_ca": _FLOAT, "l_corridor": _FLOAT,
                 "crossing_length": _FLOAT},
    "vehicle": {"d0": _FLOAT, "v0": _FLOAT},
    "pedestrian": {"model": _STR, "d0": _FLOAT, "v0": _FLOAT, "i0": _FLOAT},
    "pedestrian.script": {"points": _POINTS},
    "pedestrian.sfm": {"v0": _FLOAT, "tau": _FLOAT, "a_veh": _FLOAT,
                       "b_veh": _FLOAT, "goal": _FLOAT},
    "pedestrian.mdp": {"goal_reward": _FLOAT, "proximity_penalty": _FLOAT,
                       "step_cost": _FLOAT, "gamma": _FLOAT},
    "decision": {"i_ped_h": _FLOAT, "i_ped_l": _FLOAT, "v_ped_h": _FLOAT,
                 "v_ped_l": _FLOAT, "k_veh_acc": _FLOAT, "k_veh_dec": _FLOAT,
                 "k_disc": _FLOAT, "v_veh_d": _FLOAT, "k_num": _FLOAT},
}

# Metadata sections a loader accepts and ignores.
_META_SECTIONS = ("tuning", "meta", "calibration")

DEFAULTS = {
    "sim": {"dt": 0.01, "t_max": 60.0, "seed": 0},
    "geometry": {"d_nz": 4.0, "d_ca": 2.0, "l_corridor": 4.0,
                 "crossing_length": 20.0},
    "vehicle": {"d0": 40.0, "v0": 8.33},
    "pedestrian": {"model": "scripted", "d0": -6.0, "v0": 0.0, "i0": 0.0},
    "pedestrian.script": {"points": [(0.0, 0.0, 0.0)]},
    "pedestrian.sfm": {"v0": 1.5, "tau": 0.5, "a_veh": 2.5, "b_veh": 3.0,
                       "goal": 10.0},
    "pedestrian.mdp": {"goal_reward": 10.0, "proximity_penalty": -50.0,
                       "step_cost": -0.1, "gamma": 0.95},
    "decision": {"i_ped_h": 0.7, "i_ped_l": 0.25, "v_ped_h": 2.0,
                 "v_ped_l": -0.1, "k_veh_acc": 1.2, "k_veh_dec": 1.0,
                 "k_disc": 0.5, "v_veh_d": 8.33, "k_num": 1e-3},
}


def _parse_points(raw: str) -> list[tuple[float, float, float]]:
    points = []
    for lineno, line in enumerate(raw.strip().splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 3:
            raise ConfigError(f"script point {lineno}: expected 't v i', got {line!r}")
        try:
            points.append((float(parts[0]), float(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise ConfigError(f"script point {lineno}: {exc}") from exc
    if not points:
        raise ConfigError("script has no points")
    return points


def _convert(section: str, key: str, raw, kind: str):
    if kind == _POINTS:
        return _parse_points(raw) if isinstance(raw, str) else raw
    if kind == _STR:
        return str(raw).strip()
    try:
        return int(raw) if kind == _INT else float(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: expected {kind}, got {raw!r}") from exc


def _read_ini(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str.lower
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return parser


def _merge_parser(tree: dict, parser: configparser.ConfigParser, source: str):
    for section in parser.sections():
        if section in _META_SECTIONS:
            continue
        schema = SCENARIO_SCHEMA.get(section)
        if schema is None:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
            tree.setdefault(section, {})[key] = _convert(section, key, raw, schema[key])


def parse_overrides(pairs: list[str]) -> dict:
    """Parse repeated "section.key=value" strings into a config tree."""
    tree: dict = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form section.key=value")
        dotted, raw = pair.split("=", 1)
        dotted = dotted.strip().lower()
        if "." not in dotted:
            raise ConfigError(f"override key {dotted!r} needs a section prefix")
        section, key = dotted.rsplit(".", 1)
        schema = SCENARIO_SCHEMA.get(section)
        if schema is None or key not in schema:
            raise ConfigError(f"override {dotted!r} does not address a known setting")
        tree.setdefault(section, {})[key] = _convert(section, key, raw.strip(), schema[key])
    return tree


def _apply(tree: dict, patch: dict):
    for section, entries in patch.items():
        tree.setdefault(section, {}).update(entries)


def scenario_from_tree(tree: dict, name: str = "") -> ScenarioConfig:
    full = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    _apply(full, tree)

    geo = Geometry(**full["geometry"])
    dparams = DecisionParams(d_nz=geo.d_nz, d_ca=geo.d_ca, **full["decision"])
    ped = full["pedestrian"]
    model = ped["model"]
    cfg = ScenarioConfig(
        dt=full["sim"]["dt"], t_max=full["sim"]["t_max"], seed=full["sim"]["seed"],
        geometry=geo,
        d_veh0=full["vehicle"]["d0"], v_veh0=full["vehicle"]["v0"],
        d_ped0=ped["d0"], v_ped0=ped["v0"], i_ped0=ped["i0"],
        pedestrian_model=model,
        script=full["pedestrian.script"]["points"] if model == "scripted" else None,
        sfm=SfmParams(**full["pedestrian.sfm"]) if model == "sfm" else None,
        mdp=make_mdp_model(d_ca=geo.d_ca, **full["pedestrian.mdp"]) if model == "mdp" else None,
        decision=dparams, name=name,
    )
    cfg.validate()
    return cfg


def load_scenario(path, overrides: list[str] | None = None,
                  params_path=None, name: str | None = None) -> ScenarioConfig:
    """Load a scenario file, optionally merging a decision-parameter file
    (tuner output) and dotted-key overrides, in that order."""
    tree: dict = {}
    _merge_parser(tree, _read_ini(path), str(path))
    if params_path is not None:
        _merge_parser(tree, _read_ini(params_path), str(params_path))
    if overrides:
        _apply(tree, parse_overrides(overrides))
    from os.path import basename, splitext
    return scenario_from_tree(tree, name=name if name is not None else splitext(basename(str(path)))[0])


def params_file_text(params: DecisionParams, meta: dict | None = None) -> str:
    """Decision-parameter file: the seven tuned values plus the cruise
    setpoint, directly mergeable onto any scenario."""
    out = io.StringIO()
    out.write("[decision]\n")
    for key in TUNED_PARAM_NAMES:
        out.write(f"{key} = {getattr(params, key)!r}\n")
    out.write(f"v_veh_d = {params.v_veh_d!r}\n")
    out.write(f"k_num = {params.k_num!r}\n")
    if meta:
        out.write("\n[tuning]\n")
        for key, value in meta.items():
            out.write(f"{key} = {value}\n")
    return out.getvalue()


def write_params_file(params: DecisionParams, path, meta: dict | None = None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(params_file_text(params, meta))


def load_params_file(path, base: DecisionParams | None = None) -> DecisionParams:
    """Read a [decision] fragment and graft it onto base (defaults if None)."""
    base = base if base is not None else DecisionParams()
    parser = _read_ini(path)
    if not parser.has_section("decision"):
        raise ConfigError(f"{path}: no [decision] section")
    schema = SCENARIO_SCHEMA["decision"]
    values = {key: base.__getattribute__(key) for key in schema}
    for key, raw in parser.items("decision"):
        if key not in schema:
            raise ConfigError(f"{path}: unknown decision key {key!r}")
        values[key] = _convert("decision", key, raw, schema[key])
    return DecisionParams(d_nz=base.d_nz, d_ca=base.d_ca, **values)


# ---------------------------------------------------------------------------
# Tuning configuration


@dataclass
class TuningSpec:
    swarm: int = 30
    iterations: int = 100
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    seed: int = 1
    t_max: float = 25.0
    weights: tuple[float, float, float, float] = (1.0, 1.0, 5.0, 0.0)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    suite_paths: list[str] = field(default_factory=list)


# Gain bounds start at responsive-driving levels: below ~0.9 1/s the vehicle
# is too sluggish to clear the crossing promptly after yielding, which is a
# usability floor rather than something the comfort objective can discover.
TUNING_DEFAULT_BOUNDS = {
    "i_ped_h": (0.4, 0.95),
    "i_ped_l": (0.02, 0.4),
    "v_ped_h": (1.2, 3.0),
    "v_ped_l": (-0.5, 1.0),
    "k_veh_acc": (0.9, 2.0),
    "k_veh_dec": (1.0, 2.0),
    "k_disc": (0.05, 2.0),
}


def load_tuning_config(path=None, overrides: dict | None = None) -> TuningSpec:
    spec = TuningSpec(bounds=dict(TUNING_DEFAULT_BOUNDS))
    if path is not None:
        parser = _read_ini(path)
        for section in parser.sections():
            if section == "tuning":
                for key, raw in parser.items(section):
                    if key in ("swarm", "iterations", "seed"):
                        setattr(spec, key, int(raw))
                    elif key in ("inertia", "cognitive", "social", "t_max"):
                        setattr(spec, key, float(raw))
                    else:
                        raise ConfigError(f"unknown [tuning] key {key!r}")
            elif section == "weights":
                ws = list(spec.weights)
                names = ("k1", "k2", "k3", "k4")
                for key, raw in parser.items(section):
                    if key not in names:
                        raise ConfigError(f"unknown [weights] key {key!r}")
                    ws[names.index(key)] = float(raw)
                spec.weights = tuple(ws)
            elif section == "bounds":
                for key, raw in parser.items(section):
                    if key not in TUNED_PARAM_NAMES:
                        raise ConfigError(f"unknown [bounds] key {key!r}")
                    parts = raw.split()
                    if len(parts) != 2:
                        raise ConfigError(f"[bounds] {key}: expected 'low high'")
                    spec.bounds[key] = (float(parts[0]), float(parts[1]))
            elif section == "suite":
                raw = parser.get(section, "scenarios", fallback="")
                spec.suite_paths = [ln.strip() for ln in raw.splitlines() if ln.strip()]
            else:
                raise ConfigError(f"unknown tuning section [{section}]")
    if overrides:
        for key, value in overrides.items():
            if value is not None:
                setattr(spec, key, value)
    for key, (lo, hi) in spec.bounds.items():
        if not lo < hi:
            raise ConfigError(f"bounds for {key} must satisfy low < high, got {lo} >= {hi}")
    return spec
