"""Session and experiment configuration, JSON-serializable.

A session needs: which path to drive, which guidance method, who drives
(an agent preset or an external client), seeds, a duration cap, and any
gain overrides. Experiment specs bundle rosters of sessions.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

from .agents import AgentParams, PRESETS
from .guidance import GuidanceGains, METHODS


class ConfigInvalid(ValueError):
    """Configuration violates a structural constraint."""


@dataclass(frozen=True)
class PathSpec:
    """Training path (sweep_deg set) or seeded random path (seed set)."""

    kind: str = "training"       # "training" | "random"
    sweep_deg: float = 0.0
    seed: int = 0
    length: float = 4000.0
    lane_width: float = 3.5

    def __post_init__(self):
        if self.kind not in ("training", "random"):
            raise ConfigInvalid(f"unknown path kind {self.kind!r}")
        if self.kind == "training" and abs(self.sweep_deg) > 180.0:
            raise ConfigInvalid("training sweep must be within +-180 deg")
        if self.kind == "random" and self.length <= 0:
            raise ConfigInvalid("random path length must be positive")

    def build(self):
        from .track import build_training_path, generate_random_path
        if self.kind == "training":
            return build_training_path(math.radians(self.sweep_deg),
                                       lane_width=self.lane_width)
        return generate_random_path(self.seed, self.length,
                                    lane_width=self.lane_width)


@dataclass(frozen=True)
class DriverSpec:
    """Exactly one driver source: a preset agent or an external client."""

    kind: str = "agent"          # "agent" | "external"
    preset: str = "expert"
    seed: int = 0
    params: AgentParams | None = None  # explicit params beat the preset

    def __post_init__(self):
        if self.kind not in ("agent", "external"):
            raise ConfigInvalid(f"unknown driver kind {self.kind!r}")
        if self.kind == "agent" and self.params is None and self.preset not in PRESETS:
            raise ConfigInvalid(f"unknown preset {self.preset!r}")

    def agent_params(self) -> AgentParams:
        if self.params is not None:
            return self.params
        return PRESETS[self.preset]


@dataclass(frozen=True)
class SessionConfig:
    path: PathSpec = PathSpec()
    method: str = "N"
    driver: DriverSpec = DriverSpec()
    duration_cap: float = 360.0   # s
    gains: GuidanceGains = GuidanceGains()
    zero_steer_driver: bool = False  # autonomy runs: hands off the wheel
    start_lateral_offset: float = 0.0  # m left of the lane midline at t=0
    start_speed: float = 0.0           # m/s, rolling start when positive
    # optional seeded wheel jolts (amplitude N*m, width s, mean gap s):
    # brief external torque pulses used during data acquisition
    steer_jolt: tuple | None = None
    # optional seeded crosswind gusts (lateral speed m/s, width s, mean gap
    # s): displace the vehicle sideways without touching the wheel
    crosswind: tuple | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigInvalid(f"method must be one of {METHODS}")
        if self.duration_cap <= 0:
            raise ConfigInvalid("duration cap must be positive")


def _to_jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {}
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            if callable(v) and not dataclasses.is_dataclass(v):
                continue  # e.g. gravity-compensation hooks stay code-side
            out[f.name] = _to_jsonable(v)
        return out
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    return obj


def session_config_to_dict(cfg: SessionConfig) -> dict:
    return _to_jsonable(cfg)


def session_config_from_dict(data: dict) -> SessionConfig:
    data = dict(data)
    path = PathSpec(**data.pop("path", {}))
    driver_data = dict(data.pop("driver", {}))
    params = driver_data.pop("params", None)
    driver = DriverSpec(params=AgentParams(**params) if params else None,
                        **driver_data)
    gains = GuidanceGains(**data.pop("gains", {}))
    for key in ("steer_jolt", "crosswind"):
        if data.get(key) is not None:
            data[key] = tuple(data[key])
    return SessionConfig(path=path, driver=driver, gains=gains, **data)


def save_session_config(cfg: SessionConfig, filename) -> None:
    with open(filename, "w") as fh:
        json.dump(session_config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_session_config(filename) -> SessionConfig:
    with open(filename) as fh:
        return session_config_from_dict(json.load(fh))
