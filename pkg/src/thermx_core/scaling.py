"""Power-law tails of zeta0(lambda) and the Reynolds-number collapse of turbulent curves."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from .criticality import BoundaryCurve
from .errors import InvalidInputError

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 4


@dataclass(frozen=True, slots=True)
class PowerLawFit:
    prefactor: float
    exponent: float
    lambda_min_used: float
    rms_log_residual: float
    point_count: int

    def predict(self, lambda_: ArrayLike) -> Any:
        return self.prefactor * np.asarray(lambda_, dtype=float) ** self.exponent

    def to_dict(self) -> dict[str, float | int]:
        return {
            "prefactor": self.prefactor,
            "exponent": self.exponent,
            "lambda_min": self.lambda_min_used,
            "rms_log_residual": self.rms_log_residual,
            "n_points": self.point_count,
        }


def fit_points(
    lambdas: ArrayLike,
    zeta0s: ArrayLike,
    lambda_min: float = 10.0,
    *,
    weights: ArrayLike | None = None,
) -> PowerLawFit:
    """Least squares line through (ln lambda, ln zeta0) for lambda >= lambda_min."""
    lam = np.asarray(lambdas, dtype=float)
    zeta = np.asarray(zeta0s, dtype=float)
    if lam.shape != zeta.shape or lam.ndim != 1:
        raise InvalidInputError("lambdas and zeta0s must be 1-d arrays of equal length")
    w = None if weights is None else np.asarray(weights, dtype=float)
    if w is not None and w.shape != lam.shape:
        raise InvalidInputError("weights must match the points")
    if np.any(lam <= 0.0) or np.any(zeta <= 0.0):
        raise InvalidInputError("power-law fit needs positive lambda and zeta0")

    keep = lam >= lambda_min
    order = np.argsort(lam[keep], kind="stable")
    x = np.log(lam[keep][order])
    y = np.log(zeta[keep][order])
    if x.size < MIN_FIT_POINTS:
        raise InvalidInputError(
            f"need at least {MIN_FIT_POINTS} points with lambda >= {lambda_min}, got {x.size}"
        )
    fit_w = None if w is None else w[keep][order]
    slope, intercept = np.polyfit(x, y, 1, w=fit_w)
    residual = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(residual**2)))
    return PowerLawFit(
        prefactor=float(math.exp(intercept)),
        exponent=float(slope),
        lambda_min_used=float(lambda_min),
        rms_log_residual=rms,
        point_count=int(x.size),
    )


def fit_power_law(curve: BoundaryCurve, lambda_min: float = 10.0, *, weighted: bool = False) -> PowerLawFit:
    weights = None
    if weighted:
        widths = curve.log_widths
        if np.any(widths <= 0.0):
            raise InvalidInputError("weighted fit needs brackets of positive width")
        weights = 1.0 / widths
    return fit_points(curve.lambdas, curve.zeta0s, lambda_min, weights=weights)


def exponent_sensitivity(
    curve: BoundaryCurve, lambda_mins: Sequence[float] = (5.0, 10.0, 20.0)
) -> dict[float, PowerLawFit]:
    fits: dict[float, PowerLawFit] = {}
    for lambda_min in lambda_mins:
        try:
            fits[float(lambda_min)] = fit_power_law(curve, lambda_min)
        except InvalidInputError as exc:
            logger.info("lambda_min=%g skipped: %s", lambda_min, exc)
    return fits


def _curve_label(curve: BoundaryCurve, index: int) -> str:
    if curve.regime is None:
        return f"curve {index}"
    return f"curve {index} ({curve.regime.describe()})"


def collapse_spread(curves: Sequence[BoundaryCurve], lambda_grid: ArrayLike) -> float:
    """Largest (max - min) / median of log-log interpolated zeta0 across curves."""
    if len(curves) < 2:
        raise InvalidInputError(f"collapse needs at least 2 curves, got {len(curves)}")
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0.0):
        raise InvalidInputError("lambda_grid must be a non-empty vector of positive values")
    log_grid = np.log(grid)

    rows = []
    for index, curve in enumerate(curves):
        lam = curve.lambdas
        if lam.size < 2:
            raise InvalidInputError(f"{_curve_label(curve, index)} has fewer than 2 points")
        if grid.min() < lam.min() or grid.max() > lam.max():
            raise InvalidInputError(
                f"lambda_grid [{grid.min():g}, {grid.max():g}] outside the range "
                f"[{lam.min():g}, {lam.max():g}] of {_curve_label(curve, index)}"
            )
        rows.append(np.exp(np.interp(log_grid, np.log(lam), np.log(curve.zeta0s))))
    values = np.vstack(rows)
    spread = (values.max(axis=0) - values.min(axis=0)) / np.median(values, axis=0)
    return float(spread.max())


__all__ = [
    "MIN_FIT_POINTS",
    "PowerLawFit",
    "collapse_spread",
    "exponent_sensitivity",
    "fit_points",
    "fit_power_law",
]
