"""Independent check of the rescaled solver: march in physical zeta with adaptive steps."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .config import MarchSettings, NewtonSettings, default_settings
from .errors import InvalidInputError
from .grid import GridSpec, LayerOperator, radial_nodes, solve_layer
from .model import PipeProblem

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True, eq=False)
class Trajectory:
    zeta: NDArray[np.float64]
    u_max: NDArray[np.float64]
    rho: NDArray[np.float64]
    last_layer: NDArray[np.float64]


@dataclass(frozen=True, slots=True, eq=False)
class BlowUp:
    zeta_b: float
    trajectory: Trajectory


@dataclass(frozen=True, slots=True, eq=False)
class NoBlowUp:
    trajectory: Trajectory


def march_oracle(
    problem: PipeProblem,
    n_rho: int,
    zeta_max: float,
    *,
    rho_stretch: float | None = None,
    settings: MarchSettings | None = None,
    newton: NewtonSettings | None = None,
) -> BlowUp | NoBlowUp:
    """Backward Euler in zeta until ``zeta_max`` or until the step collapses.

    A step is rejected when Newton fails or when it moves u by more than ``du_max``; it is
    halved and retried. Easy steps grow the next one. Blow-up is declared at the last accepted
    zeta once the step falls below ``min_step``.
    """
    if zeta_max <= 0.0:
        raise InvalidInputError(f"zeta_max must be positive, got {zeta_max}")
    cfg = settings if settings is not None else default_settings().march
    newton_cfg = newton if newton is not None else default_settings().newton
    if rho_stretch is None:
        rho_stretch = GridSpec.for_regime(problem.regime).rho_stretch
    rho = radial_nodes(n_rho, rho_stretch)
    op = LayerOperator(problem.regime, rho)
    lam2 = problem.lambda_**2

    u = np.asarray(problem.inlet_profile(rho), dtype=float)
    u[-1] = 0.0
    zeta = 0.0
    step = min(cfg.first_step, zeta_max)
    zetas = [0.0]
    peaks = [float(np.max(u))]

    def trajectory() -> Trajectory:
        return Trajectory(np.asarray(zetas), np.asarray(peaks), rho, u.copy())

    while zeta < zeta_max:
        step = min(step, zeta_max - zeta)
        result = solve_layer(op, lam2, 1.0 / step, u, u, newton_cfg)
        change = float(np.max(np.abs(result.u - u))) if result.ok else np.inf
        if change <= cfg.du_max:
            zeta += step
            u = result.u
            zetas.append(zeta)
            peaks.append(float(np.max(u)))
            if change < 0.25 * cfg.du_max and result.iterations <= 4:
                step *= cfg.growth
            continue
        step *= 0.5
        if step < cfg.min_step:
            logger.info("march blew up at zeta=%.6g (u_max=%.3f)", zeta, peaks[-1])
            return BlowUp(zeta_b=zeta, trajectory=trajectory())
    logger.debug("march reached zeta=%.6g without blow-up, %d steps", zeta_max, len(zetas) - 1)
    return NoBlowUp(trajectory=trajectory())


__all__ = ["BlowUp", "NoBlowUp", "Trajectory", "march_oracle"]
