"""
Validated configuration for scenarios and experiments.

Config files are JSON. Defaults that operators commonly tune (trials, seed,
quantization bits, grid step, DMM termination) come from settings.SWARMLOC so a
.env file can change them without touching code.
"""
import json
from enum import Enum
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .channel import ChannelParams, Scenario
from .estimators import Method
from .exceptions import ConfigurationError, HarnessIOError
from .geometry import Aoi, Leg, TrajectoryPlan

BUILTIN_DEFAULTS = {
    'TRIALS': 500,
    'SEED': 2024,
    'P_BITS': 32,
    'Q_BITS': 32,
    'GRID_STEP': 200.0,
    'DMM_TOL': 1.0,
    'DMM_MAX_ITER': 50,
    'OUTPUT_DIR': 'results',
}

Vector3 = tuple[float, float, float]
Interval = tuple[float, float]


def swarmloc_default(key):
    """Value of settings.SWARMLOC[key], or the built-in default outside Django."""
    from django.conf import settings

    if settings.configured:
        return getattr(settings, 'SWARMLOC', {}).get(key, BUILTIN_DEFAULTS[key])
    return BUILTIN_DEFAULTS[key]


class ChannelConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    p0: float = 30.0
    d0: float = Field(1.0, gt=0)
    ple: float = Field(3.0, gt=0)
    noise_var: float = Field(6.0, ge=0)

    def to_params(self, **overrides):
        values = self.model_dump()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return ChannelParams(**values)


class LegConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    velocity: Vector3
    duration: float = Field(gt=0)


class UavConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    initial_position: Vector3
    legs: list[LegConfig] = []
    sample_count: int = Field(ge=1)
    ple: Optional[float] = Field(None, gt=0)
    noise_var: Optional[float] = Field(None, ge=0)

    @model_validator(mode='after')
    def check_leg_count(self):
        if len(self.legs) != self.sample_count - 1:
            raise ValueError(f"sample_count {self.sample_count} needs {self.sample_count - 1} legs, got {len(self.legs)}")
        return self

    def to_plan(self):
        legs = tuple(Leg(leg.velocity, leg.duration) for leg in self.legs)
        return TrajectoryPlan(self.initial_position, legs, self.sample_count)


class AoiConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    x_range: Interval
    y_range: Interval
    z_range: Interval = (0.0, 0.0)

    @field_validator('x_range', 'y_range', 'z_range')
    @classmethod
    def ordered(cls, value):
        if value[1] < value[0]:
            raise ValueError(f"interval {value} has lo > hi")
        return value

    def to_aoi(self):
        return Aoi(self.x_range, self.y_range, self.z_range)


class ScenarioFile(BaseModel):
    """Explicit scenario: AOI, emitter, shared channel and one plan per UAV."""
    model_config = ConfigDict(extra='forbid')

    aoi: AoiConfig
    emitter: Vector3
    channel: ChannelConfig = ChannelConfig()
    uavs: list[UavConfig] = Field(min_length=1)

    def to_scenario(self):
        params = tuple(self.channel.to_params(ple=u.ple, noise_var=u.noise_var) for u in self.uavs)
        return Scenario(self.aoi.to_aoi(), self.emitter, tuple(u.to_plan() for u in self.uavs), params)


class SweepKind(str, Enum):
    NONE = 'none'
    ROUNDS = 'rounds'
    UAV_COUNT = 'uav_count'
    GRID_STEP = 'grid_step'


class SweepConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    kind: SweepKind = SweepKind.NONE
    values: list[float] = []

    @model_validator(mode='after')
    def check_values(self):
        if self.kind is SweepKind.NONE:
            return self
        if not self.values:
            raise ValueError(f"a {self.kind.value} sweep needs at least one value")
        if any(v <= 0 for v in self.values):
            raise ValueError("sweep values must be positive")
        if self.kind in (SweepKind.ROUNDS, SweepKind.UAV_COUNT):
            if any(v != int(v) for v in self.values):
                raise ValueError(f"{self.kind.value} sweep values must be integers")
            self.values = [int(v) for v in self.values]
        if self.kind is SweepKind.UAV_COUNT and any(v < 2 for v in self.values):
            raise ValueError("uav_count sweep values must be at least 2")
        return self

    @property
    def points(self):
        """Sweep values to iterate; a single None when there is no sweep."""
        return list(self.values) if self.kind is not SweepKind.NONE else [None]


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    name: str = 'experiment'
    template: Literal['circle', 'sweep', 'line'] = 'circle'
    scenario: Optional[ScenarioFile] = None
    n_uavs: int = Field(5, ge=2)
    samples_per_uav: int = Field(8, ge=2)
    channel: ChannelConfig = ChannelConfig()
    altitude: float = 60.0
    aoi_size: float = Field(12000.0, gt=0)
    emitter_altitude: Interval = (0.0, 0.0)
    radius: float = Field(4000.0, ge=0)
    speed: float = Field(20.0, gt=0)
    leg_duration: Optional[float] = Field(None, gt=0)
    grid_step: float = Field(default_factory=lambda: swarmloc_default('GRID_STEP'), gt=0)
    tau: int = Field(3, ge=1)
    p_bits: int = Field(default_factory=lambda: swarmloc_default('P_BITS'), ge=1)
    q_bits: int = Field(default_factory=lambda: swarmloc_default('Q_BITS'), ge=1)
    tol: float = Field(default_factory=lambda: swarmloc_default('DMM_TOL'), ge=0)
    max_iter: int = Field(default_factory=lambda: swarmloc_default('DMM_MAX_ITER'), ge=0)
    damping: Optional[float] = Field(None, ge=0)
    init: Literal['centroid', 'grid'] = 'centroid'
    methods: list[Method] = [Method.DMM, Method.DGN, Method.DEF, Method.DEM]
    trials: int = Field(default_factory=lambda: swarmloc_default('TRIALS'), ge=1)
    seed: int = Field(default_factory=lambda: swarmloc_default('SEED'), ge=0)
    sweep: SweepConfig = SweepConfig()
    output: Optional[str] = None

    @field_validator('methods', mode='before')
    @classmethod
    def parse_methods(cls, value):
        return [Method.parse(v) for v in value]

    @model_validator(mode='after')
    def check_methods(self):
        if not self.methods:
            raise ValueError("at least one method is required")
        if self.scenario is not None and self.sweep.kind is SweepKind.UAV_COUNT:
            raise ValueError("a uav_count sweep needs a scenario template, not an explicit scenario")
        return self

    @property
    def ordered_methods(self):
        """Requested methods, deduplicated, in canonical order."""
        return [m for m in Method if m in set(self.methods)]


def validate_config(model, data):
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        problems = '; '.join(
            f"{'.'.join(str(p) for p in error['loc']) or '<root>'}: {error['msg']}" for error in exc.errors()
        )
        raise ConfigurationError(f"invalid {model.__name__}: {problems}") from exc


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise HarnessIOError(path, f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc


def load_experiment_config(path=None, **overrides):
    """
    Build an ExperimentConfig from an optional JSON file; keyword overrides
    that are not None replace file values.
    """
    data = read_json(path) if path else {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top-level JSON value must be an object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return validate_config(ExperimentConfig, data)


def load_scenario_file(path):
    """Validated ScenarioFile from JSON; call to_scenario() for the runtime Scenario."""
    return validate_config(ScenarioFile, read_json(path))
