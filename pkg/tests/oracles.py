"""Closed-form laminar solution of (1/rho)(rho u')' + lambda^2 e^u = 0, u'(0) = 0, u(1) = 0."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray


def laminar_b(lambda_: float, *, upper: bool = False) -> float:
    # 8B = lambda^2 (1 + B)^2, smaller root on the stable branch
    root = 2.0 * math.sqrt(4.0 - 2.0 * lambda_**2)
    sign = 1.0 if upper else -1.0
    return (4.0 - lambda_**2 + sign * root) / lambda_**2


def laminar_profile(
    lambda_: float, rho: NDArray[np.float64], *, upper: bool = False
) -> NDArray[np.float64]:
    b = laminar_b(lambda_, upper=upper)
    return np.log(8.0 * b / (lambda_**2 * (1.0 + b * rho**2) ** 2))


def laminar_lambda_of_u0(u0: float) -> float:
    return math.sqrt(8.0 * (math.exp(0.5 * u0) - 1.0) * math.exp(-u0))
