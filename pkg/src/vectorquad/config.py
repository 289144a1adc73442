"""Scenario configuration: YAML files checked against ``schema/scenario.schema.json``."""
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Optional

import jsonschema
import numpy as np
import yaml

from .controller import GainSet
from .sim import RigidState, SimConfig
from .so3 import euler_zxy_to_rotation, exp_so3
from .trajectories import (CorkscrewReference, HoverReference, PipeReference, Reference,
                           WaterTowerReference)
from .vehicle import VehicleParams


class ConfigError(ValueError):
    """Invalid scenario file; the message names the field and, when known, the line."""


def load_schema() -> dict:
    text = resources.files("vectorquad").joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


def _node_at(node, path):
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    break
            if nxt is None:
                return node
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            return node
    return node


def _offending_key_line(node, err) -> Optional[int]:
    # additionalProperties errors point at the parent; find the unknown key itself
    if err.validator == "additionalProperties" and isinstance(node, yaml.MappingNode):
        allowed = set(err.schema.get("properties", {}))
        for k, _ in node.value:
            if k.value not in allowed:
                return k.start_mark.line + 1
    return None


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse and validate; raises :class:`ConfigError` with a located message."""
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ConfigError(f"{where}: YAML syntax error: {getattr(exc, 'problem', exc)}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: (len(e.absolute_path), str(e.path)))
    if errors:
        msgs = []
        for err in errors:
            path = list(err.absolute_path)
            node = _node_at(root, path) if root is not None else None
            line = _offending_key_line(node, err) if node is not None else None
            if line is None and node is not None:
                line = node.start_mark.line + 1
            field_name = ".".join(str(p) for p in path) or "<root>"
            loc = f"{source}:{line}" if line else source
            msgs.append(f"{loc}: {field_name}: {err.message}")
        raise ConfigError("\n".join(msgs))
    return data


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path))


# --------------------------------------------------------------------------
# Building runtime objects
# --------------------------------------------------------------------------


def vehicle_from_config(block: Optional[dict]) -> VehicleParams:
    b = block or {}
    d = VehicleParams()
    try:
        return VehicleParams(
            m=b.get("mass", d.m),
            J=b.get("inertia", d.J),
            c_t=b.get("thrust_coefficient", d.c_t),
            l_x=b.get("arm_half_length", d.l_x),
            l_y=b.get("arm_half_breadth", d.l_y),
            l_z=b.get("arm_height", d.l_z),
            t_max=b.get("max_arm_thrust", d.t_max),
            omega_max=b.get("max_rotor_speed", d.omega_max),
            servo_rate_max=b.get("max_servo_rate", d.servo_rate_max),
            g_vec=b.get("gravity", d.g_vec),
        )
    except ValueError as exc:
        raise ConfigError(f"vehicle: {exc}") from None


def gains_from_config(block: Optional[dict], params: VehicleParams) -> GainSet:
    d = GainSet.default(params)
    b = block or {}
    return GainSet(b.get("k_p", d.k_p), b.get("k_v", d.k_v), b.get("k_R", d.k_R), b.get("k_w", d.k_w))


def sim_from_config(block: Optional[dict], seed: int = 0) -> SimConfig:
    b = dict(block or {})
    try:
        return SimConfig(seed=seed, **b)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sim: {exc}") from None


def _euler(b: dict) -> np.ndarray:
    return euler_zxy_to_rotation(np.deg2rad(b.get("yaw_deg", 0.0)), np.deg2rad(b.get("roll_deg", 0.0)),
                                 np.deg2rad(b.get("pitch_deg", 0.0)))


def trajectory_from_config(block: Optional[dict]) -> Reference:
    b = dict(block or {"kind": "hover"})
    kind = b.pop("kind", "hover")
    try:
        if kind == "hover":
            return HoverReference(b.get("position", (0.0, 0.0, 1.0)), _euler(b), b.get("duration", 5.0))
        if kind == "watertower":
            kw = {k: b[k] for k in ("radius", "height", "ascent_rate", "standoff", "start_height",
                                    "base", "hold") if k in b}
            if "apex_elevation_deg" in b:
                kw["apex_elevation"] = np.deg2rad(b["apex_elevation_deg"])
            if "turn_deg" in b:
                kw["turn"] = np.deg2rad(b["turn_deg"])
            return WaterTowerReference(**kw)
        if kind == "pipe":
            wps = b["waypoints"]
            return PipeReference([w["position"] for w in wps], [_euler(w) for w in wps],
                                 b.get("speed", 0.5), b.get("hold", 1.0))
        if kind == "corkscrew":
            return CorkscrewReference(**b)
    except ValueError as exc:
        raise ConfigError(f"trajectory: {exc}") from None
    raise ConfigError(f"trajectory.kind: unknown kind {kind!r}")


def initial_state(block: Optional[dict], ref: Reference, seed: int) -> Optional[RigidState]:
    """Reference start pose perturbed by the ``initial`` block (None if absent)."""
    if not block:
        return None
    s0 = ref(0.0)
    p = s0.p + np.asarray(block.get("position_offset", (0, 0, 0)), float)
    v = s0.v + np.asarray(block.get("velocity_offset", (0, 0, 0)), float)
    angle = np.deg2rad(block.get("attitude_error_deg", 0.0))
    if "attitude_axis" in block:
        axis = np.asarray(block["attitude_axis"], float)
        if np.linalg.norm(axis) == 0:
            raise ConfigError("initial.attitude_axis: must be nonzero")
    else:
        axis = np.random.default_rng(seed).normal(size=3)
    axis = axis / np.linalg.norm(axis)
    R = s0.R @ exp_so3(angle * axis)
    w = R.T @ s0.R @ s0.w + np.asarray(block.get("angular_velocity_offset", (0, 0, 0)), float)
    return RigidState(p, v, R, w)


@dataclass
class Scenario:
    raw: Dict[str, Any]
    seed: int
    params: VehicleParams
    gains: GainSet
    sim: SimConfig
    trajectory: Reference
    initial: Optional[RigidState]
    roa: Dict[str, Any] = field(default_factory=dict)
    n_dirs: int = 1000
    output: Dict[str, str] = field(default_factory=dict)


def build_scenario(data: dict, seed: Optional[int] = None) -> Scenario:
    seed = int(data.get("seed", 0) if seed is None else seed)
    params = vehicle_from_config(data.get("vehicle"))
    gains = gains_from_config(data.get("gains"), params)
    simcfg = sim_from_config(data.get("sim"), seed)
    ref = trajectory_from_config(data.get("trajectory"))
    init = initial_state(data.get("initial"), ref, seed)
    out = {"dir": "out", "telemetry": "telemetry.csv", "summary": "summary.json",
           "envelope": "envelope.json", "roa": "roa.csv"}
    out.update(data.get("output", {}))
    return Scenario(data, seed, params, gains, simcfg, ref, init, dict(data.get("roa", {})),
                    int(data.get("envelope", {}).get("n_dirs", 1000)), out)
