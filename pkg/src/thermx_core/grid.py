"""Evolution problem on the fixed (rho, xi) domain.

The axial coordinate is rescaled to xi = zeta / zeta0 so that zeta0 enters as a parameter.
Radially the operator (1/rho) d/drho [a(rho) du/drho] is discretised with conservative finite
volumes (cell volumes are integrals of rho drho, the axis cell has no inner flux); axially the
scheme is backward Euler. Because every xi-layer only couples to the one before it, the global
Newton system is block lower triangular and is solved layer by layer with tridiagonal
Jacobians.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Any, TypeAlias

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from scipy.integrate import quad
from scipy.linalg import solve_banded

from .config import NewtonSettings, default_settings
from .errors import InvalidInputError
from .model import FlowRegime, Laminar, PipeProblem, axial_coefficient, diffusion_weight

logger = logging.getLogger(__name__)

FloatArray: TypeAlias = NDArray[np.float64]


def radial_nodes(n_rho: int, rho_stretch: float | None = None) -> FloatArray:
    """Nodes 0 = rho_0 < ... < rho_N = 1; cell widths shrink by ``rho_stretch`` toward the wall."""
    if n_rho < 3:
        raise InvalidInputError(f"need at least 3 radial nodes, got {n_rho}")
    if rho_stretch is None or rho_stretch == 1.0:
        return np.linspace(0.0, 1.0, n_rho)
    if rho_stretch < 1.0:
        raise InvalidInputError(f"rho_stretch must be >= 1, got {rho_stretch}")
    widths = rho_stretch ** -np.arange(n_rho - 1, dtype=float)
    nodes = np.concatenate(([0.0], np.cumsum(widths) / widths.sum()))
    nodes[-1] = 1.0
    return nodes


@dataclass(frozen=True, slots=True)
class GridSpec:
    n_rho: int
    n_xi: int
    rho_stretch: float | None = None

    def __post_init__(self) -> None:
        if self.n_rho < 32 or self.n_xi < 32:
            raise InvalidInputError(
                f"grid needs n_rho >= 32 and n_xi >= 32, got ({self.n_rho}, {self.n_xi})"
            )
        if self.rho_stretch is not None and self.rho_stretch < 1.0:
            raise InvalidInputError(f"rho_stretch must be >= 1, got {self.rho_stretch}")

    @classmethod
    def for_regime(
        cls, regime: FlowRegime, n_rho: int | None = None, n_xi: int | None = None
    ) -> GridSpec:
        defaults = default_settings().grid
        stretch = None if isinstance(regime, Laminar) else defaults.turbulent_stretch
        return cls(
            n_rho=defaults.n_rho if n_rho is None else n_rho,
            n_xi=defaults.n_xi if n_xi is None else n_xi,
            rho_stretch=stretch,
        )

    @property
    def rho(self) -> FloatArray:
        return radial_nodes(self.n_rho, self.rho_stretch)

    @property
    def xi(self) -> FloatArray:
        return np.linspace(0.0, 1.0, self.n_xi + 1)

    @property
    def d_xi(self) -> float:
        return 1.0 / self.n_xi

    def with_n_xi(self, n_xi: int) -> GridSpec:
        return GridSpec(n_rho=self.n_rho, n_xi=n_xi, rho_stretch=self.rho_stretch)

    def refined(self) -> GridSpec:
        return GridSpec(n_rho=2 * self.n_rho, n_xi=2 * self.n_xi, rho_stretch=self.rho_stretch)


def face_conductance(regime: FlowRegime, rho: FloatArray) -> FloatArray:
    """Conductance between neighbouring nodes.

    Turbulent intervals off the axis use 1 / integral(drho / a); a vanishes at the wall like
    (1 - rho)^(1 - alpha). The axis interval and the laminar regime use a(midpoint) / h.
    """
    half = 0.5 * (rho[:-1] + rho[1:])
    conductance = np.asarray(diffusion_weight(regime, half), dtype=float) / np.diff(rho)
    if isinstance(regime, Laminar):
        return conductance
    alpha = regime.alpha

    def inner(r: float) -> float:
        return 1.0 / (r * r * (1.0 - r) ** (1.0 - alpha))

    def wall(r: float) -> float:
        return 1.0 / (r * r)

    for i in range(1, rho.size - 1):
        lo, hi = float(rho[i]), float(rho[i + 1])
        if hi < 1.0:
            resistance, _ = quad(inner, lo, hi, epsabs=0.0, epsrel=1e-12)
        else:
            resistance, _ = quad(
                wall, lo, hi, weight="alg", wvar=(0.0, alpha - 1.0), epsabs=0.0, epsrel=1e-12
            )
        conductance[i] = 1.0 / resistance
    return conductance


class LayerOperator:
    """Finite-volume stencil of one xi-layer for a regime on fixed radial nodes."""

    def __init__(self, regime: FlowRegime, rho: FloatArray) -> None:
        self.regime = regime
        self.rho = rho
        half = 0.5 * (rho[:-1] + rho[1:])
        self.conductance = face_conductance(regime, rho)
        outer = half**2
        inner = np.concatenate(([0.0], outer[:-1]))
        self.volume = 0.5 * (outer - inner)
        self.axial = np.asarray(axial_coefficient(regime, rho[:-1]))
        right = self.conductance
        left = np.concatenate(([0.0], self.conductance[:-1]))
        self._spread = (right + left) / self.volume

    @property
    def size(self) -> int:
        return self.rho.size

    def diffusion(self, u: FloatArray) -> FloatArray:
        flux = self.conductance * np.diff(u)
        inner = np.concatenate(([0.0], flux[:-1]))
        return (flux - inner) / self.volume

    def residual(
        self,
        u: FloatArray,
        prev: FloatArray,
        inv_step: float,
        lam2: float,
        source: FloatArray | None = None,
    ) -> FloatArray:
        interior = u[:-1]
        out = np.empty_like(u)
        out[:-1] = (
            self.axial * (interior - prev[:-1]) * inv_step
            - self.diffusion(u)
            - lam2 * np.exp(interior)
        )
        if source is not None:
            out[:-1] -= source[:-1]
        out[-1] = u[-1]
        return out

    def row_scale(self, inv_step: float) -> FloatArray:
        return self.axial * inv_step + self._spread

    def newton_step(self, u: FloatArray, residual: FloatArray, inv_step: float, lam2: float) -> FloatArray:
        n = self.size - 1
        bands = np.zeros((3, n))
        bands[0, 1:] = -self.conductance[: n - 1] / self.volume[: n - 1]
        bands[1, :] = self.row_scale(inv_step) - lam2 * np.exp(u[:-1])
        bands[2, :-1] = -self.conductance[: n - 1] / self.volume[1:]
        step = np.zeros_like(u)
        step[:-1] = solve_banded((1, 1), bands, -residual[:-1], check_finite=False)
        return step

    def wall_flux(self, u: FloatArray) -> float:
        return float(self.conductance[-1] * (u[-1] - u[-2]))

    def balance_defect(self, u: FloatArray, prev: FloatArray, inv_step: float, lam2: float) -> float:
        """Volume-weighted sum of (advection - reaction) minus the wall flux."""
        interior = u[:-1]
        gain = self.axial * (interior - prev[:-1]) * inv_step - lam2 * np.exp(interior)
        return float(np.sum(self.volume * gain) - self.wall_flux(u))


class Failure(StrEnum):
    NEWTON_STALL = "newton-stall"
    UMAX_EXCEEDED = "umax-exceeded"


@dataclass(slots=True)
class LayerResult:
    u: FloatArray
    iterations: int
    history: list[float]
    failure: Failure | None = None
    u_max: float = 0.0

    @property
    def ok(self) -> bool:
        return self.failure is None


def solve_layer(
    op: LayerOperator,
    lam2: float,
    inv_step: float,
    prev: FloatArray,
    guess: FloatArray,
    settings: NewtonSettings,
) -> LayerResult:
    """Damped Newton for one implicit layer; the wall value stays at zero."""
    u = guess.copy()
    u[-1] = 0.0
    scale = op.row_scale(inv_step)

    def norm(res: FloatArray) -> float:
        return float(np.max(np.abs(res[:-1]) / scale))

    u_max = float(np.max(u))
    if u_max > settings.u_blow:
        return LayerResult(u, 0, [], Failure.UMAX_EXCEEDED, u_max)
    res = op.residual(u, prev, inv_step, lam2)
    current = norm(res)
    history = [current]
    iterations = 0
    while current >= settings.tol:
        if iterations >= settings.max_iter or not math.isfinite(current):
            return LayerResult(u, iterations, history, Failure.NEWTON_STALL, u_max)
        iterations += 1
        delta = op.newton_step(u, res, inv_step, lam2)
        step, halvings = 1.0, 0
        while True:
            trial = u + step * delta
            trial_max = float(np.max(trial))
            if trial_max > settings.u_blow:
                return LayerResult(trial, iterations, history, Failure.UMAX_EXCEEDED, trial_max)
            trial_res = op.residual(trial, prev, inv_step, lam2)
            trial_norm = norm(trial_res)
            if math.isfinite(trial_norm) and trial_norm < current:
                break
            if halvings >= settings.max_halvings:
                return LayerResult(u, iterations, history, Failure.NEWTON_STALL, u_max)
            step *= 0.5
            halvings += 1
        u, res, current, u_max = trial, trial_res, trial_norm, trial_max
        history.append(current)
    return LayerResult(u, iterations, history, None, u_max)


@dataclass(frozen=True, slots=True, eq=False)
class Field2D:
    grid: GridSpec
    u: FloatArray
    zeta0: float
    problem: PipeProblem

    def __post_init__(self) -> None:
        expected = (self.grid.n_rho, self.grid.n_xi + 1)
        if self.u.shape != expected:
            raise InvalidInputError(f"field shape {self.u.shape} does not match grid {expected}")
        if not np.all(np.isfinite(self.u)):
            raise InvalidInputError("field contains non-finite values")
        if np.any(self.u[-1, :] != 0.0):
            raise InvalidInputError("field violates the wall condition u(1, xi) = 0")

    @property
    def rho(self) -> FloatArray:
        return self.grid.rho

    @property
    def xi(self) -> FloatArray:
        return self.grid.xi

    @property
    def u_max(self) -> float:
        return float(np.max(self.u))

    @property
    def outlet(self) -> FloatArray:
        return self.u[:, -1]

    def operator(self) -> LayerOperator:
        return LayerOperator(self.problem.regime, self.rho)

    def to_frame(self) -> pd.DataFrame:
        rho, xi = np.meshgrid(self.rho, self.xi, indexing="xy")
        return pd.DataFrame({"rho": rho.ravel(), "xi": xi.ravel(), "u": self.u.T.ravel()})

    def summary(self, iterations: FloatArray | None = None) -> dict[str, Any]:
        data: dict[str, Any] = {
            "lambda": self.problem.lambda_,
            "regime": self.problem.regime.describe(),
            "zeta0": self.zeta0,
            "n_rho": self.grid.n_rho,
            "n_xi": self.grid.n_xi,
            "u_max": self.u_max,
            "outlet": {"rho": self.rho.tolist(), "u": self.outlet.tolist()},
        }
        if iterations is not None:
            data["newton_iterations"] = [int(v) for v in iterations]
        return data


@dataclass(frozen=True, slots=True, eq=False)
class Converged:
    field: Field2D
    newton_iters_per_layer: NDArray[np.int_]
    residual_norm: float
    residual_histories: tuple[tuple[float, ...], ...] = ()


@dataclass(frozen=True, slots=True)
class Diverged:
    last_good_layer: int
    failure: Failure
    u_max_reached: float
    zeta0: float = math.nan


SolveOutcome: TypeAlias = Converged | Diverged


def discretize_residual(
    problem: PipeProblem,
    grid: GridSpec,
    zeta0: float,
    u_layer: FloatArray,
    u_prev_layer: FloatArray,
    *,
    source: FloatArray | None = None,
) -> FloatArray:
    if zeta0 <= 0.0:
        raise InvalidInputError(f"zeta0 must be positive, got {zeta0}")
    u_layer = np.asarray(u_layer, dtype=float)
    u_prev_layer = np.asarray(u_prev_layer, dtype=float)
    if u_layer.shape != (grid.n_rho,) or u_prev_layer.shape != (grid.n_rho,):
        raise InvalidInputError("layers must have n_rho entries")
    op = LayerOperator(problem.regime, grid.rho)
    inv_step = 1.0 / (grid.d_xi * zeta0)
    return op.residual(u_layer, u_prev_layer, inv_step, problem.lambda_**2, source)


def newton_solve(
    problem: PipeProblem,
    grid: GridSpec,
    zeta0: float,
    warm_start: Field2D | None = None,
    *,
    settings: NewtonSettings | None = None,
) -> SolveOutcome:
    if not math.isfinite(zeta0) or zeta0 <= 0.0:
        raise InvalidInputError(f"zeta0 must be positive, got {zeta0}")
    cfg = settings if settings is not None else default_settings().newton
    rho = grid.rho
    op = LayerOperator(problem.regime, rho)
    lam2 = problem.lambda_**2
    inv_step = 1.0 / (grid.d_xi * zeta0)

    warm: FloatArray | None = None
    if warm_start is not None:
        if warm_start.u.shape == (grid.n_rho, grid.n_xi + 1):
            warm = warm_start.u
        else:
            logger.debug("warm start on a different grid ignored")

    u = np.zeros((grid.n_rho, grid.n_xi + 1))
    u[:, 0] = problem.inlet_profile(rho)
    u[-1, 0] = 0.0
    iterations = np.zeros(grid.n_xi, dtype=int)
    histories: list[tuple[float, ...]] = []
    worst = 0.0
    for j in range(1, grid.n_xi + 1):
        prev = u[:, j - 1]
        guess = warm[:, j] if warm is not None else prev
        result = solve_layer(op, lam2, inv_step, prev, guess, cfg)
        if not result.ok:
            assert result.failure is not None
            logger.debug(
                "layer %d of %d failed (%s) at zeta0=%.6g", j, grid.n_xi, result.failure, zeta0
            )
            return Diverged(
                last_good_layer=j - 1,
                failure=result.failure,
                u_max_reached=max(result.u_max, float(np.max(u[:, :j]))),
                zeta0=zeta0,
            )
        u[:, j] = result.u
        iterations[j - 1] = result.iterations
        histories.append(tuple(result.history))
        worst = max(worst, result.history[-1])
    field_ = Field2D(grid=grid, u=u, zeta0=zeta0, problem=problem)
    return Converged(
        field=field_,
        newton_iters_per_layer=iterations,
        residual_norm=worst,
        residual_histories=tuple(histories),
    )


def wall_flux(field_: Field2D, j: int) -> float:
    return field_.operator().wall_flux(field_.u[:, j])


def conservation_defect(field_: Field2D, j: int) -> float:
    if not 1 <= j <= field_.grid.n_xi:
        raise InvalidInputError(f"layer index {j} outside 1..{field_.grid.n_xi}")
    inv_step = 1.0 / (field_.grid.d_xi * field_.zeta0)
    return field_.operator().balance_defect(
        field_.u[:, j], field_.u[:, j - 1], inv_step, field_.problem.lambda_**2
    )


__all__ = [
    "Converged",
    "Diverged",
    "Failure",
    "Field2D",
    "GridSpec",
    "LayerOperator",
    "LayerResult",
    "SolveOutcome",
    "conservation_defect",
    "discretize_residual",
    "face_conductance",
    "newton_solve",
    "radial_nodes",
    "solve_layer",
    "wall_flux",
]
