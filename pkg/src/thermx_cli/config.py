from __future__ import annotations

from enum import StrEnum
from pathlib import Path
from typing import Any, Literal, NoReturn

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from thermx_core.config import EnvSettings, SolverSettings, default_settings, load_settings
from thermx_core.errors import ConfigError
from thermx_core.model import FlowRegime, GasSpec, Laminar, Turbulent


class Command(StrEnum):
    STEADY = "steady"
    LAMBDA_CR = "lambda-cr"
    ZETA0 = "zeta0"
    SWEEP = "sweep"
    FIT = "fit"
    COLLAPSE = "collapse"
    DIMENSIONAL = "dimensional"


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    command: Command
    regime: Literal["laminar", "turbulent"] = "laminar"
    re: float | None = Field(default=None, gt=1.0)
    lambda_: float | None = Field(default=None, alias="lambda", gt=0)
    lambdas: list[float] = Field(default_factory=list)
    sweep_from: float | None = Field(default=None, gt=0)
    sweep_to: float | None = Field(default=None, gt=0)
    sweep_points: int = Field(default=30, ge=2)
    re_list: list[float] = Field(default_factory=list)
    branch: Literal["lower", "upper"] = "lower"
    n_nodes: int | None = Field(default=None, ge=3)
    n_rho: int | None = Field(default=None, ge=32)
    n_xi: int | None = Field(default=None, ge=32)
    rel_tol: float | None = Field(default=None, gt=1.0e-4, le=0.1)
    newton_tol: float | None = Field(default=None, gt=0)
    zeta_cap: float | None = Field(default=None, gt=0)
    zeta0: float | None = Field(default=None, ge=0)
    lambda_min: float = Field(default=10.0, gt=0)
    weighted: bool = False
    collapse_from: float = Field(default=5.0, gt=0)
    collapse_to: float = Field(default=50.0, gt=0)
    collapse_points: int = Field(default=16, ge=1)
    input: Path | None = None
    inputs: list[Path] = Field(default_factory=list)
    gas: Path | None = None
    out: Path | None = None
    json_out: Path | None = None
    field_out: Path | None = None
    settings: Path | None = None
    pde: bool = False
    jobs: int | None = Field(default=None, ge=1)

    @field_validator("lambdas", "re_list", "inputs", mode="before")
    @classmethod
    def _split_list(cls, raw: Any) -> Any:
        if raw is None:
            return []
        if isinstance(raw, str):
            return [item.strip() for item in raw.split(",") if item.strip()]
        return raw

    @field_validator("lambdas", "re_list")
    @classmethod
    def _positive(cls, values: list[float]) -> list[float]:
        if any(not np.isfinite(v) or v <= 0 for v in values):
            raise ValueError("all values must be finite and positive")
        return values

    def flow_regime(self) -> FlowRegime:
        if self.regime == "laminar":
            return Laminar()
        if self.re is None:
            raise ConfigError("the turbulent regime needs a Reynolds number", key="re")
        return Turbulent.from_re(self.re)

    def sweep_lambdas(self) -> list[float]:
        if self.lambdas:
            return sorted(set(self.lambdas))
        if self.sweep_from is None or self.sweep_to is None:
            raise ConfigError("sweep needs 'lambdas' or 'sweep_from' and 'sweep_to'", key="lambdas")
        if self.sweep_to <= self.sweep_from:
            raise ConfigError("sweep_to must exceed sweep_from", key="sweep_to")
        return [float(v) for v in np.geomspace(self.sweep_from, self.sweep_to, self.sweep_points)]

    def collapse_grid(self) -> list[float]:
        if self.collapse_to < self.collapse_from:
            raise ConfigError("collapse_to must not be below collapse_from", key="collapse_to")
        return [
            float(v)
            for v in np.geomspace(self.collapse_from, self.collapse_to, self.collapse_points)
        ]

    def effective_jobs(self) -> int:
        if self.jobs is not None:
            return self.jobs
        return EnvSettings().jobs

    def solver_settings(self) -> SolverSettings:
        base = load_settings(self.settings).data if self.settings else default_settings()
        grid = base.grid.model_copy(
            update={k: v for k, v in (("n_rho", self.n_rho), ("n_xi", self.n_xi)) if v is not None}
        )
        newton = base.newton
        if self.newton_tol is not None:
            newton = newton.model_copy(update={"tol": self.newton_tol})
        continuation = base.continuation
        pairs = (("rel_tol", self.rel_tol), ("zeta_cap", self.zeta_cap))
        updates = {k: v for k, v in pairs if v is not None}
        if updates:
            continuation = continuation.model_copy(update=updates)
        return base.model_copy(update={"grid": grid, "newton": newton, "continuation": continuation})


_REQUIRED: dict[Command, tuple[str, ...]] = {
    Command.STEADY: ("lambda_",),
    Command.ZETA0: ("lambda_",),
    Command.FIT: ("input",),
    Command.DIMENSIONAL: ("gas",),
}

_ALIASES = {"lambda": "lambda_", "in": "input"}


def _canonical(key: str) -> str:
    name = key.strip().replace("-", "_")
    return _ALIASES.get(name, name)


def read_pairs(text: str, known: set[str]) -> tuple[dict[str, str], dict[str, int]]:
    """Parse ``key = value`` lines; returns the values and the line each key came from."""
    values: dict[str, str] = {}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        name = _canonical(key)
        if name not in known:
            raise ConfigError("unknown key", line=number, key=key)
        if name in lines:
            raise ConfigError(f"duplicate key (first set on line {lines[name]})", line=number, key=key)
        if not value:
            raise ConfigError("missing value", line=number, key=key)
        values[name] = value
        lines[name] = number
    return values, lines


def _raise_from_validation(exc: ValidationError, lines: dict[str, int]) -> NoReturn:
    error = exc.errors()[0]
    loc = error.get("loc") or ()
    field = _canonical(str(loc[0])) if loc else None
    raise ConfigError(
        error.get("msg", "invalid value"),
        line=lines.get(field) if field else None,
        key=field.rstrip("_") if field else None,
    ) from exc


def parse_config(text: str, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Validated run configuration from config-file text; non-None overrides win."""
    known = set(RunConfig.model_fields)
    values: dict[str, Any]
    values, lines = read_pairs(text, known)
    for key, value in (overrides or {}).items():
        name = _canonical(key)
        if name not in known:
            raise ConfigError("unknown option", key=key)
        if value is not None:
            values[name] = value
            lines.pop(name, None)
    if "command" not in values:
        raise ConfigError("no command given", key="command")
    try:
        config = RunConfig.model_validate(values)
    except ValidationError as exc:
        _raise_from_validation(exc, lines)
    for name in _REQUIRED.get(config.command, ()):
        if getattr(config, name) is None:
            raise ConfigError(f"required by '{config.command}'", key=name.rstrip("_"))
    if config.command is Command.COLLAPSE and len(config.inputs) < 2:
        raise ConfigError("collapse needs at least two curve files", key="inputs")
    if config.regime == "turbulent" and config.re is None and config.command in (
        Command.STEADY,
        Command.ZETA0,
        Command.SWEEP,
    ):
        raise ConfigError(
            "the turbulent regime needs a Reynolds number", line=lines.get("regime"), key="re"
        )
    return config


def parse_gas(text: str) -> GasSpec:
    known = set(GasSpec.model_fields)
    values, lines = read_pairs(text, known)
    try:
        return GasSpec.model_validate(values)
    except ValidationError as exc:
        _raise_from_validation(exc, lines)


__all__ = ["Command", "RunConfig", "parse_config", "parse_gas", "read_pairs"]
