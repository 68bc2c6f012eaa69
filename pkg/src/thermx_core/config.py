from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

DEFAULTS_PATH = Path(__file__).with_name("defaults.yml")


class PhysicsSettings(BaseModel):
    prandtl: float = Field(default=0.7, gt=0)
    diffusivity_factor: float = Field(default=1.0, gt=0)
    re_window: tuple[float, float] = (2000.0, 1.0e9)
    phi_warning: float = Field(default=10.0, gt=1)


class SteadySettings(BaseModel):
    rho_start: float = Field(default=1.0e-8, gt=0, lt=1.0e-3)
    wall_delta: float = Field(default=1.0e-6, gt=0, lt=1.0e-2)
    rtol: float = Field(default=1.0e-10, gt=0)
    atol: float = Field(default=1.0e-12, gt=0)
    n_nodes: int = Field(default=401, ge=3)
    scan_points: int = Field(default=64, ge=8)
    u0_scan: tuple[float, float] = (0.1, 10.0)
    golden_tol: float = Field(default=1.0e-6, gt=0)
    criticality_tol: float = Field(default=1.0e-9, gt=0)

    @model_validator(mode="after")
    def _check_scan(self) -> SteadySettings:
        low, high = self.u0_scan
        if not 0 < low < high:
            raise ValueError(f"u0_scan must satisfy 0 < low < high, got {self.u0_scan}")
        return self


class GridSettings(BaseModel):
    n_rho: int = Field(default=128, ge=32)
    n_xi: int = Field(default=128, ge=32)
    turbulent_stretch: float = Field(default=1.05, ge=1.0)


class NewtonSettings(BaseModel):
    tol: float = Field(default=1.0e-10, gt=0)
    max_iter: int = Field(default=50, ge=1)
    max_halvings: int = Field(default=8, ge=0)
    u_blow: float = Field(default=30.0, gt=0)


class ContinuationSettings(BaseModel):
    zeta_start: float = Field(default=1.0e-4, gt=0)
    zeta_floor: float = Field(default=1.0e-9, gt=0)
    zeta_cap: float = Field(default=1.0e3, gt=0)
    rel_tol: float = Field(default=1.0e-3, gt=1.0e-4, le=0.1)
    escalation_fraction: float = Field(default=0.9, gt=0, le=1)
    lambda_rel_tol: float = Field(default=1.0e-3, gt=0)

    @model_validator(mode="after")
    def _check_order(self) -> ContinuationSettings:
        if not self.zeta_floor <= self.zeta_start < self.zeta_cap:
            raise ValueError("continuation needs zeta_floor <= zeta_start < zeta_cap")
        return self


class MarchSettings(BaseModel):
    min_step: float = Field(default=1.0e-12, gt=0)
    first_step: float = Field(default=1.0e-6, gt=0)
    du_max: float = Field(default=0.05, gt=0)
    growth: float = Field(default=1.5, gt=1)


class SolverSettings(BaseModel):
    physics: PhysicsSettings = Field(default_factory=PhysicsSettings)
    steady: SteadySettings = Field(default_factory=SteadySettings)
    grid: GridSettings = Field(default_factory=GridSettings)
    newton: NewtonSettings = Field(default_factory=NewtonSettings)
    continuation: ContinuationSettings = Field(default_factory=ContinuationSettings)
    march: MarchSettings = Field(default_factory=MarchSettings)


class EnvSettings(BaseSettings):
    """Process environment; ``THERMX_JOBS`` backs the ``jobs`` key."""

    model_config = SettingsConfigDict(env_prefix="THERMX_", extra="ignore")

    jobs: int = Field(default=1, ge=1)


@dataclass(slots=True)
class LoadedSettings:
    source: Path
    data: SolverSettings


def load_settings(path: str | Path = DEFAULTS_PATH) -> LoadedSettings:
    settings_path = Path(path)
    if not settings_path.exists():
        raise FileNotFoundError(f"settings file not found: {settings_path}")
    with settings_path.open("r", encoding="utf-8") as fp:
        raw: dict[str, Any] = yaml.safe_load(fp) or {}
    data = SolverSettings.model_validate(raw)
    return LoadedSettings(source=settings_path, data=data)


@lru_cache(maxsize=1)
def default_settings() -> SolverSettings:
    return load_settings().data


__all__ = [
    "DEFAULTS_PATH",
    "ContinuationSettings",
    "EnvSettings",
    "GridSettings",
    "LoadedSettings",
    "MarchSettings",
    "NewtonSettings",
    "PhysicsSettings",
    "SolverSettings",
    "SteadySettings",
    "default_settings",
    "load_settings",
]
