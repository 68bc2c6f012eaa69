"""Dimensionless formulation of the reacting pipe flow.

Flow regimes, the coefficient functions of the radial operator, the turbulent power-law closure
and the conversions between a dimensional gas description and the dimensionless parameters
(lambda, zeta0) used by the solvers.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Literal, TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import brentq

from .config import default_settings
from .errors import FrictionClosureError, InvalidInputError

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
GAS_CONSTANT = 8.314462618

RegimeKind = Literal["laminar", "turbulent"]
InletProfile = Callable[[NDArray[np.float64]], NDArray[np.float64]]


def alpha_of_re(re: float) -> float:
    if not math.isfinite(re) or re <= 1.0:
        raise InvalidInputError(f"Reynolds number must exceed 1 (ln Re > 0), got {re}")
    return 3.0 / (2.0 * math.log(re))


def c_of_alpha(alpha: float) -> float:
    if not math.isfinite(alpha) or alpha <= 0.0:
        raise InvalidInputError(f"power-law exponent must be positive, got {alpha}")
    return (SQRT3 + 5.0 * alpha) / (2.0 * alpha)


@dataclass(frozen=True, slots=True)
class Laminar:
    kind: RegimeKind = field(default="laminar", init=False)

    def describe(self) -> str:
        return "laminar"


@dataclass(frozen=True, slots=True)
class Turbulent:
    re: float
    alpha: float
    c: float
    kind: RegimeKind = field(default="turbulent", init=False)

    def __post_init__(self) -> None:
        expected_alpha = alpha_of_re(self.re)
        if expected_alpha >= 1.5:
            raise InvalidInputError(
                f"Re={self.re} gives alpha={expected_alpha:.6g}; the power law needs alpha < 1.5"
            )
        expected_c = c_of_alpha(expected_alpha)
        if not math.isclose(self.alpha, expected_alpha, rel_tol=1e-12):
            raise InvalidInputError(f"alpha={self.alpha} inconsistent with Re={self.re}")
        if not math.isclose(self.c, expected_c, rel_tol=1e-12):
            raise InvalidInputError(f"C={self.c} inconsistent with Re={self.re}")

    @classmethod
    def from_re(cls, re: float) -> Turbulent:
        alpha = alpha_of_re(re)
        check_reynolds_window(re)
        return cls(re=float(re), alpha=alpha, c=c_of_alpha(alpha))

    def describe(self) -> str:
        return f"turbulent(Re={self.re:.6g}, alpha={self.alpha:.6g})"


FlowRegime: TypeAlias = Laminar | Turbulent


def check_reynolds_window(re: float) -> bool:
    low, high = default_settings().physics.re_window
    inside = low <= re <= high
    if not inside:
        logger.warning(
            "Re=%.6g lies outside the developed-turbulence window [%.6g, %.6g]", re, low, high
        )
    return inside


def make_regime(kind: str, re: float | None = None) -> FlowRegime:
    if kind == "laminar":
        return Laminar()
    if kind == "turbulent":
        if re is None:
            raise InvalidInputError("turbulent regime requires a Reynolds number")
        return Turbulent.from_re(re)
    raise InvalidInputError(f"unknown regime '{kind}' (expected laminar or turbulent)")


def _as_rho(rho: ArrayLike) -> NDArray[np.float64]:
    values = np.asarray(rho, dtype=float)
    if np.any(~np.isfinite(values)) or np.any(values < 0.0) or np.any(values > 1.0):
        raise InvalidInputError("rho must lie in [0, 1]")
    return values


def _like_input(rho: ArrayLike, values: NDArray[np.float64]) -> NDArray[np.float64] | float:
    if np.ndim(rho) == 0:
        return float(values)
    return values


def advection_coefficient(regime: FlowRegime, rho: ArrayLike) -> NDArray[np.float64] | float:
    """V(rho) as it enters the energy balance: 2(1-rho^2) laminar, (1-rho)^alpha turbulent."""
    r = _as_rho(rho)
    if isinstance(regime, Laminar):
        values = 2.0 * (1.0 - r * r)
    else:
        values = np.power(1.0 - r, regime.alpha)
    return _like_input(rho, values)


def axial_coefficient(regime: FlowRegime, rho: ArrayLike) -> NDArray[np.float64] | float:
    """Coefficient of the axial derivative in the solved evolution problem.

    Laminar flow is solved with the redefined axial coordinate for which the coefficient is
    (1 - rho^2), so that zeta0 converts to a length with z0 = r0 Re Pr zeta0. The turbulent
    coefficient already carries its normalisation through the redefinition of zeta.
    """
    r = _as_rho(rho)
    if isinstance(regime, Laminar):
        values = 1.0 - r * r
    else:
        values = np.power(1.0 - r, regime.alpha)
    return _like_input(rho, values)


def diffusion_weight(regime: FlowRegime, rho: ArrayLike) -> NDArray[np.float64] | float:
    """a(rho) in (1/rho) d/drho [a(rho) du/drho]."""
    r = _as_rho(rho)
    if isinstance(regime, Laminar):
        values = r.copy()
    else:
        values = r * r * np.power(1.0 - r, 1.0 - regime.alpha)
    return _like_input(rho, values)


def velocity_profile(regime: FlowRegime, rho: ArrayLike) -> NDArray[np.float64] | float:
    """Longitudinal velocity divided by the mean velocity."""
    r = _as_rho(rho)
    if isinstance(regime, Laminar):
        values = 2.0 * (1.0 - r * r)
    else:
        a = regime.alpha
        values = np.power(1.0 - r, a) * (a + 1.0) * (a + 2.0) / 2.0
    return _like_input(rho, values)


def _mean_flow_prefactor(alpha: float) -> float:
    return c_of_alpha(alpha) * 2.0 ** (1.0 - alpha) / ((alpha + 1.0) * (alpha + 2.0))


def reynolds_from_friction(friction_re: float, alpha: float) -> float:
    """Re produced by averaging the power-law profile at a given v_* d / nu0."""
    return _mean_flow_prefactor(alpha) * friction_re ** (1.0 + alpha)


def friction_reynolds(re: float) -> float:
    """v_* d / nu0 closing the power law so that its cross-section mean reproduces Re."""
    alpha = alpha_of_re(re)
    log_prefactor = math.log(_mean_flow_prefactor(alpha))
    log_re = math.log(re)

    def mismatch(log_w: float) -> float:
        return log_prefactor + (1.0 + alpha) * log_w - log_re

    low, high = -50.0, 100.0
    if mismatch(low) * mismatch(high) > 0.0:
        raise FrictionClosureError(f"no friction Reynolds number brackets Re={re}")
    root, info = brentq(mismatch, low, high, xtol=1e-14, rtol=1e-14, full_output=True)
    if not info.converged:
        raise FrictionClosureError(f"friction closure did not converge for Re={re}: {info.flag}")
    return math.exp(root)


class GasSpec(BaseModel):
    """Dimensional gas and reaction properties (SI units).

    ``preexponential`` follows the convention that heat_of_reaction * preexponential /
    heat_capacity has units K/s, which makes the reaction-conduction length a length.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    heat_capacity: float = Field(gt=0)
    molecular_diffusivity: float = Field(gt=0)
    kinematic_viscosity: float = Field(gt=0)
    heat_of_reaction: float = Field(gt=0)
    preexponential: float = Field(gt=0)
    activation_energy: float = Field(gt=0)
    gas_constant: float = Field(default=GAS_CONSTANT, gt=0)
    wall_temperature: float = Field(gt=0)
    pipe_radius: float = Field(gt=0)
    discharge: float = Field(gt=0)
    diffusivity_factor: float = Field(default=1.0, gt=0)
    prandtl: float = Field(default=0.7, gt=0)

    @model_validator(mode="after")
    def _check_activation(self) -> GasSpec:
        phi = self.phi
        if phi <= 1.0:
            raise ValueError(f"E/(R T0) = {phi:.6g} must exceed 1 (high activation energy)")
        if phi < default_settings().physics.phi_warning:
            logger.warning("E/(R T0) = %.4g is small for the high-activation-energy limit", phi)
        molecular_pr = self.kinematic_viscosity / self.molecular_diffusivity
        if not math.isclose(molecular_pr, self.prandtl, rel_tol=0.05):
            logger.warning(
                "Prandtl number %.4g differs from nu0/kappa0 = %.4g", self.prandtl, molecular_pr
            )
        return self

    @property
    def phi(self) -> float:
        return self.activation_energy / (self.gas_constant * self.wall_temperature)

    @property
    def mean_velocity(self) -> float:
        return self.discharge / (math.pi * self.pipe_radius**2)

    @property
    def reynolds(self) -> float:
        return 2.0 * self.mean_velocity * self.pipe_radius / self.kinematic_viscosity

    @property
    def log_ell_squared_laminar(self) -> float:
        phi = self.phi
        return (
            phi
            + math.log(self.molecular_diffusivity * self.wall_temperature * self.heat_capacity)
            - math.log(self.heat_of_reaction * phi * self.preexponential)
        )


@dataclass(frozen=True, slots=True)
class LengthScale:
    lambda_: float
    ell: float
    regime: FlowRegime


def regime_for_gas(gas: GasSpec, kind: str) -> FlowRegime:
    return make_regime(kind, gas.reynolds if kind == "turbulent" else None)


def lambda_from_gas(gas: GasSpec, kind: str = "laminar") -> LengthScale:
    regime = regime_for_gas(gas, kind)
    log_ell2 = gas.log_ell_squared_laminar
    if isinstance(regime, Turbulent):
        a = regime.alpha
        w = friction_reynolds(regime.re)
        factor = (
            gas.prandtl * gas.diffusivity_factor / (2.0 ** (1.0 - a) * a * regime.c)
        ) * w ** (1.0 - a)
        if not math.isfinite(factor) or factor <= 0.0:
            raise InvalidInputError(f"turbulent length factor is not positive: {factor}")
        log_ell2 += math.log(factor)
    if not math.isfinite(log_ell2):
        raise InvalidInputError("reaction-conduction length squared is not a positive number")
    ell = math.exp(0.5 * log_ell2)
    return LengthScale(lambda_=gas.pipe_radius / ell, ell=ell, regime=regime)


def dimensional_critical_length(
    gas: GasSpec,
    regime: FlowRegime,
    zeta0: float,
    *,
    friction_re: float | None = None,
) -> float:
    if not math.isfinite(zeta0) or zeta0 < 0.0:
        raise InvalidInputError(f"zeta0 must be finite and nonnegative, got {zeta0}")
    if isinstance(regime, Laminar):
        return gas.pipe_radius * gas.reynolds * gas.prandtl * zeta0
    a = regime.alpha
    w = friction_reynolds(regime.re) if friction_re is None else friction_re
    return (
        gas.pipe_radius * a * regime.c**2 * w ** (2.0 * a) * zeta0
        / (2.0**a * gas.diffusivity_factor)
    )


@dataclass(frozen=True, slots=True)
class PipeProblem:
    lambda_: float
    regime: FlowRegime = field(default_factory=Laminar)
    inlet: InletProfile | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.lambda_) or self.lambda_ < 0.0:
            raise InvalidInputError(f"lambda must be finite and nonnegative, got {self.lambda_}")
        if self.inlet is not None:
            wall = float(np.asarray(self.inlet(np.array([1.0])), dtype=float)[0])
            if abs(wall) > 1e-12:
                raise InvalidInputError(f"inlet profile must vanish at the wall, u0(1)={wall}")

    def inlet_profile(self, rho: NDArray[np.float64]) -> NDArray[np.float64]:
        if self.inlet is None:
            return np.zeros_like(rho, dtype=float)
        return np.asarray(self.inlet(rho), dtype=float)

    def with_lambda(self, lambda_: float) -> PipeProblem:
        return PipeProblem(lambda_=lambda_, regime=self.regime, inlet=self.inlet)


__all__ = [
    "GAS_CONSTANT",
    "FlowRegime",
    "GasSpec",
    "Laminar",
    "LengthScale",
    "PipeProblem",
    "RegimeKind",
    "Turbulent",
    "advection_coefficient",
    "alpha_of_re",
    "axial_coefficient",
    "c_of_alpha",
    "check_reynolds_window",
    "diffusion_weight",
    "dimensional_critical_length",
    "friction_reynolds",
    "lambda_from_gas",
    "make_regime",
    "regime_for_gas",
    "reynolds_from_friction",
    "velocity_profile",
]
