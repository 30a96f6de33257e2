"""Run configuration.

Values come from (highest first) explicit overrides, a flat KEY=value config
file, RYDSAT_* environment variables or a .env file, and the defaults below.
Frequencies are configured in MHz (f = omega / 2 pi) and converted to angular
units on access.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from dotenv import dotenv_values
from pydantic import Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .atoms.embedding import TWO_PI, GeometryParams
from .atoms.evolution import Schedule, SimOptions, default_schedule
from .atoms.hamiltonian import InteractionModel, model_from_name
from .errors import ConfigError
from .readout.measurement import ConfusionModel
from .readout.verdict import RAW, RENORMALIZED

_UNHASHED = {"output_dir", "db_path", "input_path", "workers"}


class RunConfig(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="RYDSAT_", env_file=".env", extra="ignore")

    input_path: Optional[str] = None
    stages: str = "all"
    output_dir: str = "runs"
    db_path: str = "rydsat_runs.db"

    # geometry
    d_um: float = Field(7.0, gt=0)
    d_blockade_um: float = Field(10.0, gt=0)
    edge_tolerance_um: float = Field(0.05, gt=0)
    min_separation_um: float = Field(3.0, gt=0)
    dimension: int = 2
    embed_restarts: int = Field(8, ge=1)
    embedding: Optional[str] = None
    alpha: float = Field(0.0, ge=0.0, le=1.0)

    # interactions and drive
    model: str = "ideal"
    u_mhz: Optional[float] = Field(None, gt=0)
    c6_mhz_um6: float = Field(1.0e6, gt=0)
    omega_mhz: float = Field(1.0, gt=0)
    delta0_mhz: float = Field(2.0, gt=0)
    total_time_us: float = Field(4.0, gt=0)
    ramp_up_fraction: float = Field(0.25, gt=0)
    sweep_fraction: float = Field(0.5, gt=0)
    ramp_down_fraction: float = Field(0.25, gt=0)

    # simulation
    dt_us: float = Field(1e-3, gt=0)
    integrator: str = "krylov"
    trajectories: int = Field(100, ge=1)
    gamma_decay_mhz: float = Field(0.0, ge=0)
    gamma_dephase_mhz: float = Field(0.0, ge=0)
    open_mode: str = "auto"
    rabi_factors: str = ""

    # readout
    p_1_given_0: float = Field(0.039, ge=0, lt=1)
    p_0_given_1: float = Field(0.079, ge=0, lt=1)
    confusion_path: Optional[str] = None
    shots: int = Field(10000, ge=1)
    threshold: float = Field(0.5, ge=0, le=1)
    accounting: str = RAW

    # seeds
    embed_seed: int = 0
    sim_seed: int = 0
    sample_seed: int = 0
    workers: int = Field(1, ge=1)

    @field_validator("model")
    @classmethod
    def _known_model(cls, value: str) -> str:
        if value.lower() not in ("ideal", "graph", "graphu", "vdw"):
            raise ValueError(f"unknown interaction model {value!r}")
        return value.lower()

    @field_validator("accounting")
    @classmethod
    def _known_accounting(cls, value: str) -> str:
        if value not in (RAW, RENORMALIZED):
            raise ValueError(f"accounting must be {RAW!r} or {RENORMALIZED!r}")
        return value

    @field_validator("dimension")
    @classmethod
    def _plane_or_space(cls, value: int) -> int:
        if value not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        return value

    @field_validator("rabi_factors")
    @classmethod
    def _positive_factors(cls, value: str) -> str:
        if value.strip():
            factors = [float(v) for v in value.split(",")]
            if any(f <= 0 for f in factors):
                raise ValueError("Rabi factors must be positive")
        return value

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        if not self.d_um < self.d_blockade_um:
            raise ValueError("need d_um < d_blockade_um")
        fractions = self.schedule_fractions
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ValueError(f"schedule fractions must sum to 1, got {sum(fractions)}")
        if self.integrator not in ("krylov", "adaptive"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.open_mode not in ("auto", "trajectories", "dense"):
            raise ValueError(f"unknown open-system mode {self.open_mode!r}")
        return self

    @property
    def schedule_fractions(self) -> Tuple[float, float, float]:
        return (self.ramp_up_fraction, self.sweep_fraction, self.ramp_down_fraction)

    @property
    def use_embedding(self) -> bool:
        return self.stages == "all" or "embed" in self.stages.split(",") or self.model == "vdw"

    def geometry(self) -> GeometryParams:
        return GeometryParams(self.d_um, self.d_blockade_um, self.edge_tolerance_um, self.min_separation_um)

    def interaction_model(self) -> InteractionModel:
        u = TWO_PI * self.u_mhz if self.u_mhz is not None else None
        return model_from_name(self.model, u=u, c6=TWO_PI * self.c6_mhz_um6)

    def schedule(self) -> Schedule:
        return default_schedule(
            TWO_PI * self.delta0_mhz, TWO_PI * self.omega_mhz, self.total_time_us, self.schedule_fractions
        )

    def sim_options(self) -> SimOptions:
        return SimOptions(
            dt=self.dt_us,
            method=self.integrator,
            trajectories=self.trajectories,
            gamma_decay=TWO_PI * self.gamma_decay_mhz,
            gamma_dephase=TWO_PI * self.gamma_dephase_mhz,
            open_mode=self.open_mode,
            seed=self.sim_seed,
            workers=self.workers,
        )

    def rabi_factor_list(self) -> Optional[list]:
        if not self.rabi_factors.strip():
            return None
        return [float(v) for v in self.rabi_factors.split(",")]

    def confusion(self) -> ConfusionModel:
        if self.confusion_path:
            return ConfusionModel.from_json(self.confusion_path)
        return ConfusionModel(self.p_1_given_0, self.p_0_given_1)

    def fingerprint(self) -> str:
        payload = self.model_dump(mode="json", exclude=_UNHASHED)
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def _field_names() -> Dict[str, str]:
    return {name.upper(): name for name in RunConfig.model_fields}


def load_config(path: Optional[Union[str, Path]] = None, **overrides: Any) -> RunConfig:
    """Build a RunConfig from an optional KEY=value file plus explicit overrides"""
    values: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        names = _field_names()
        for key, value in dotenv_values(path).items():
            if key.upper() not in names:
                raise ConfigError(f"unknown config key {key!r} in {path}")
            if value is not None and value != "":
                values[names[key.upper()]] = value
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e.errors()[0]['msg']}")


def write_default_config(path: Union[str, Path]) -> Path:
    path = Path(path)
    lines = [
        "# rydsat run configuration",
        "# frequencies in MHz (omega / 2 pi), lengths in um, times in us",
    ]
    for name, info in RunConfig.model_fields.items():
        default = info.default
        lines.append(f"{name.upper()}={'' if default is None else default}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
