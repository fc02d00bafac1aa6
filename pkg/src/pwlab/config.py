"""CLI configuration: schema, defaults, dotted overrides and object builders."""
from __future__ import annotations

import copy
import json
from pathlib import Path

import jsonschema
import numpy as np

from .core import GridSpec, ParticleModel, WaveFunction
from .errors import ConfigInvalid
from .guidance import IntegratorOptions
from .potentials import Harmonic, Potential, potential_from_dict
from .schrodinger import gaussian_packet, harmonic_ground_state, plane_wave

_vec = {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 3}
_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "pwlab run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "grid": {
            "type": "object", "additionalProperties": False, "required": ["points", "lo", "hi"],
            "properties": {"points": {"type": "array", "items": {"type": "integer", "minimum": 16}, "minItems": 1, "maxItems": 3},
                           "lo": _vec, "hi": _vec},
        },
        "masses": {"type": "array", "items": _pos, "minItems": 1, "maxItems": 3},
        "state": {
            "type": "object", "required": ["kind"],
            "properties": {"kind": {"enum": ["gaussian", "plane_wave", "harmonic_ground"]},
                           "center": _vec, "momentum": _vec, "sigma": _vec,
                           "mode": {"type": "array", "items": {"type": "integer"}}},
        },
        "potential": {
            "type": "object", "required": ["kind"],
            "properties": {"kind": {"enum": ["free", "harmonic", "gaussian_barrier", "uniform_gradient", "custom"]}},
        },
        "evolution": {
            "type": "object", "additionalProperties": False,
            "properties": {"t_final": _num, "dt": _pos, "snapshot_stride": {"type": "integer", "minimum": 1},
                           "save_snapshots": {"type": "boolean"}},
        },
        "integration": {
            "type": "object", "additionalProperties": False,
            "properties": {"dt": _pos, "node_floor": {"type": ["number", "null"], "exclusiveMinimum": 0},
                           "tolerance": _pos},
        },
        "starts": {
            "type": "object", "required": ["kind"],
            "properties": {"kind": {"enum": ["points", "linspace", "uniform"]},
                           "points": {"type": "array", "items": _vec},
                           "lo": _vec, "hi": _vec, "n": {"type": "integer", "minimum": 1}},
        },
        "seed": {"type": "integer", "minimum": 0},
        "second_order": {"type": "object", "properties": {"v0": {"anyOf": [{"const": "guidance"}, _vec]},
                                                          "v0_offset": {"anyOf": [{"type": "null"}, _vec]}}},
        "boost": {"type": "object", "properties": {"v": _vec}},
        "euclidean": {"type": "object", "properties": {"angle": _num, "rotation": {"type": "array", "items": _vec},
                                                       "translation": _vec}},
        "acceleration": {"type": "object", "properties": {"a": _vec, "v0": _vec,
                                                          "alt_masses": {"anyOf": [{"type": "null"}, _vec]},
                                                          "t_final": _pos, "dt": _pos}},
        "continuity": {"type": "object", "properties": {"t_eval": _num, "levels": {"type": "integer", "minimum": 2}}},
        "ensemble": {"type": "object", "properties": {"kind": {"enum": ["equilibrium", "cluster"]}, "n": {"type": "integer", "minimum": 1},
                                                      "cluster_center": _vec, "cluster_width": _pos}},
        "mass_audit": {"type": "object", "properties": {"mass_scale": _pos, "n": {"type": "integer", "minimum": 1}}},
        "refinement": {"type": "object", "properties": {"enabled": {"type": "boolean"}, "refine_grid": {"type": "boolean"}}},
        "tolerances": {"type": "object", "additionalProperties": _num},
        "output": {"type": "object", "properties": {"svg": {"type": "boolean"}, "svg_timestamp": {"type": "boolean"},
                                                    "encoding": {"enum": ["binary", "csv"]}}},
    },
}

DEFAULTS = {
    "grid": {"points": [1024], "lo": [-20.0], "hi": [20.0]},
    "masses": [1.0],
    "state": {"kind": "gaussian", "center": [0.0], "momentum": [0.0], "sigma": [1.0]},
    "potential": {"kind": "free"},
    "evolution": {"t_final": 1.0, "dt": 1e-3, "snapshot_stride": 10, "save_snapshots": False},
    "integration": {"dt": 1e-3, "node_floor": None, "tolerance": 1e-9},
    "starts": {"kind": "linspace", "lo": [-2.0], "hi": [2.0], "n": 20},
    "seed": 0,
    "second_order": {"v0": "guidance", "v0_offset": None},
    "boost": {"v": [0.5]},
    "euclidean": {"angle": 0.6, "translation": [0.0, 0.0]},
    "acceleration": {"a": [1.0], "v0": [0.5], "alt_masses": None, "t_final": 2.0, "dt": 1e-3},
    "continuity": {"t_eval": 0.5, "levels": 3},
    "ensemble": {"kind": "equilibrium", "n": 10000, "cluster_center": [1.0], "cluster_width": 0.05},
    "mass_audit": {"mass_scale": 2.0, "n": 10000},
    "refinement": {"enabled": False, "refine_grid": True},
    "tolerances": {},
    "output": {"svg": True, "svg_timestamp": False, "encoding": "binary"},
}

# Check thresholds per command; a configured ``tolerances`` entry overrides.
DEFAULT_TOLERANCES = {
    "evolve": {"norm_drift": 1e-10},
    "trajectories": {"max_failures": 0},
    "second-order": {"max_failures": 0},
    "boost-audit": {"max_gap": 1e-4, "phase_gradient_residual": 1e-6, "min_refinement_ratio": 3.0},
    "frame-audit": {"max_pointwise_diff": 1e-6},
    "accel-audit": {"max_gap": 1e-10, "universality": 1e-12},
    "equivalence-audit": {"max_gap": 1e-4, "min_mismatch_gap": 1e-2},
    "continuity-audit": {"max_residual": 1e-4, "min_order": 2.0, "order_decimals": 2},
    "ensemble": {"max_ks": 0.02, "min_ks_nonequilibrium": 0.2},
    "mass-audit": {"max_control_ks": 0.02, "min_ratio": 5.0},
}


def deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_override(item: str) -> tuple[list[str], object]:
    if "=" not in item:
        raise ConfigInvalid(f"override {item!r} must look like key.path=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(cfg: dict, overrides) -> dict:
    cfg = copy.deepcopy(cfg)
    for item in overrides or ():
        path, value = parse_override(item)
        node = cfg
        for p in path[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigInvalid(f"override path {'.'.join(path)} crosses a non-object")
        node[path[-1]] = value
    return cfg


_PER_AXIS = (("grid", ("lo", "hi")), ("state", ("center", "momentum", "sigma")), ("starts", ("lo", "hi")),
             ("boost", ("v",)), ("acceleration", ("a", "v0")), ("euclidean", ("translation",)),
             ("ensemble", ("cluster_center",)))


def load_config(path, overrides=(), seed=None) -> dict:
    user = {}
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigInvalid("config must be a JSON object")
    user = apply_overrides(user, overrides)
    if seed is not None:
        user["seed"] = seed
    cfg = deep_merge(DEFAULTS, user)
    # per-axis defaults follow the grid dimension
    points = cfg["grid"].get("points") if isinstance(cfg["grid"], dict) else None
    dim = len(points) if isinstance(points, list) and points else 1
    for section, keys in _PER_AXIS:
        given = user.get(section) if isinstance(user.get(section), dict) else {}
        for k in keys:
            val = cfg[section].get(k) if isinstance(cfg.get(section), dict) else None
            if isinstance(val, list) and val and k not in given and len(val) != dim:
                cfg[section][k] = val[:1] * dim
    if "masses" not in user:
        cfg["masses"] = cfg["masses"][:1] * dim
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigInvalid(f"config invalid at {where}: {exc.message}") from exc
    build_model(cfg, build_grid(cfg))
    return cfg


def tolerances(cfg: dict, command: str) -> dict:
    return {**DEFAULT_TOLERANCES.get(command, {}), **cfg.get("tolerances", {})}


# --------------------------------------------------------------------------
# builders

def build_grid(cfg) -> GridSpec:
    g = cfg["grid"]
    try:
        return GridSpec(tuple(g["points"]), tuple(g["lo"]), tuple(g["hi"]))
    except ValueError as exc:
        raise ConfigInvalid(f"grid: {exc}") from exc


def build_model(cfg, grid: GridSpec) -> ParticleModel:
    try:
        model = ParticleModel(tuple(cfg["masses"]))
        model.check(grid)
    except ValueError as exc:
        raise ConfigInvalid(f"masses: {exc}") from exc
    return model


def build_potential(cfg) -> Potential:
    try:
        return potential_from_dict(cfg["potential"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigInvalid(f"potential: {exc}") from exc


def build_state(cfg, grid: GridSpec, model: ParticleModel, potential: Potential) -> WaveFunction:
    st = cfg["state"]
    if st["kind"] == "gaussian":
        return gaussian_packet(grid, st["center"], st["momentum"], st["sigma"])
    if st["kind"] == "plane_wave":
        return plane_wave(grid, st["mode"])
    if st["kind"] == "harmonic_ground":
        if not isinstance(potential, Harmonic):
            raise ConfigInvalid("state harmonic_ground needs a harmonic potential")
        return harmonic_ground_state(grid, potential, model)
    raise ConfigInvalid(f"unknown state kind {st['kind']!r}")


def build_starts(cfg, grid: GridSpec) -> np.ndarray:
    s = cfg["starts"]
    if s["kind"] == "points":
        pts = np.asarray(s["points"], dtype=float).reshape(-1, grid.dim)
    elif s["kind"] == "linspace":
        lo, hi = np.asarray(s["lo"], dtype=float), np.asarray(s["hi"], dtype=float)
        pts = lo + np.linspace(0, 1, s["n"])[:, None] * (hi - lo)
    else:
        rng = np.random.default_rng(cfg["seed"])
        lo, hi = np.asarray(s["lo"], dtype=float), np.asarray(s["hi"], dtype=float)
        pts = lo + rng.random((s["n"], grid.dim)) * (hi - lo)
    if not np.all(grid.contains(pts)):
        raise ConfigInvalid("starts must lie inside the grid extent")
    return pts


def build_options(cfg, workers: int = 1) -> IntegratorOptions:
    i = cfg["integration"]
    return IntegratorOptions(dt=i["dt"], node_floor=i["node_floor"], tolerance=i["tolerance"], workers=workers)
