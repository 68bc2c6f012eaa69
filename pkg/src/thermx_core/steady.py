"""Steady radial problems and the critical parameter lambda_cr.

The steady equation (1/rho) (a(rho) u')' + lambda^2 e^u = 0 with a regular axis has a
one-parameter family of solutions indexed by u(0). Writing u = u0 + w and
mu = lambda^2 e^{u0}, w solves the same equation with lambda^2 replaced by mu and w(0) = 0,
so every family member follows from a single axis-to-wall integration in mu:

    u_wall(lambda, u0) = u0 + w_wall(mu)

Members meeting the wall condition satisfy u0 = -w_wall(mu), lambda^2 = mu e^{w_wall(mu)};
lambda_cr is the maximum of that curve (the envelope touch).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .config import SteadySettings, default_settings
from .errors import (
    AtCriticalityError,
    EnvelopeError,
    InvalidInputError,
    SolverError,
    SteadyIntegrationError,
)
from .model import FlowRegime, Laminar, Turbulent

logger = logging.getLogger(__name__)

_MU_GROWTH = 1.5
_MU_CEILING = 1.0e14


class Branch(StrEnum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True, slots=True, eq=False)
class SteadyProfile:
    rho_nodes: NDArray[np.float64]
    u_values: NDArray[np.float64]
    flux_values: NDArray[np.float64]
    lambda_: float
    regime: FlowRegime
    branch: Branch | None

    @property
    def u0(self) -> float:
        return float(self.u_values[0])

    @property
    def u_wall(self) -> float:
        return float(self.u_values[-1])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"rho": self.rho_nodes, "u": self.u_values})


@dataclass(frozen=True, slots=True)
class NoSolution:
    lambda_: float
    regime: FlowRegime
    max_lambda_seen: float

    @property
    def message(self) -> str:
        return (
            f"no steady solution for lambda={self.lambda_:.6g} in the {self.regime.describe()} "
            f"regime (family reaches lambda={self.max_lambda_seen:.6g} at most)"
        )


@dataclass(frozen=True, slots=True)
class EnvelopeResult:
    lambda_cr: float
    u0_at_cr: float
    curve: tuple[tuple[float, float], ...]
    regime: FlowRegime

    def to_frame(self) -> pd.DataFrame:
        u0, lam = zip(*self.curve, strict=True) if self.curve else ((), ())
        return pd.DataFrame({"u0": u0, "lambda": lam})


@dataclass(frozen=True, slots=True)
class _Shot:
    w_wall: float
    flux_wall: float
    rho: NDArray[np.float64] | None = None
    w: NDArray[np.float64] | None = None
    flux: NDArray[np.float64] | None = None


def _settings(settings: SteadySettings | None) -> SteadySettings:
    return settings if settings is not None else default_settings().steady


def _shoot_reduced(
    regime: FlowRegime,
    mu: float,
    settings: SteadySettings,
    nodes: NDArray[np.float64] | None = None,
) -> _Shot:
    """Integrate w' = F/a, F' = -mu rho e^w from the axis, w(0) = 0."""
    rho_s = settings.rho_start
    if isinstance(regime, Laminar):
        rho_end = 1.0
        w_start = -0.25 * mu * rho_s**2

        def weight(rho: float) -> float:
            return rho

    else:
        alpha = regime.alpha
        rho_end = 1.0 - settings.wall_delta
        w_start = -0.5 * mu * rho_s

        def weight(rho: float) -> float:
            return rho * rho * (1.0 - rho) ** (1.0 - alpha)

    flux_start = -0.5 * mu * rho_s**2

    def rhs(rho: float, y: NDArray[np.float64]) -> list[float]:
        return [y[1] / weight(rho), -mu * rho * math.exp(y[0])]

    t_eval = None
    if nodes is not None:
        inside = (nodes > rho_s) & (nodes <= rho_end)
        t_eval = nodes[inside]
        if t_eval.size == 0 or t_eval[-1] < rho_end:
            t_eval = np.append(t_eval, rho_end)

    sol = solve_ivp(
        rhs,
        (rho_s, rho_end),
        [w_start, flux_start],
        method="DOP853",
        t_eval=t_eval,
        rtol=settings.rtol,
        atol=settings.atol,
    )
    if sol.status != 0:
        raise SteadyIntegrationError(f"steady integration failed: {sol.message}", rho=sol.t[-1])

    # rho_end is always the last evaluation point
    w_end = float(sol.y[0, -1])
    flux_end = float(sol.y[1, -1])
    if isinstance(regime, Turbulent):
        delta = settings.wall_delta
        w_wall = w_end + flux_end * delta**regime.alpha / regime.alpha
    else:
        w_wall = w_end

    if nodes is None:
        return _Shot(w_wall=w_wall, flux_wall=flux_end)

    w = np.zeros_like(nodes)
    flux = np.zeros_like(nodes)
    inside_idx = np.flatnonzero(inside)
    w[inside_idx] = sol.y[0, : inside_idx.size]
    flux[inside_idx] = sol.y[1, : inside_idx.size]
    wall_idx = np.flatnonzero(nodes > rho_end)
    w[wall_idx] = w_wall
    flux[wall_idx] = flux_end
    return _Shot(w_wall=w_wall, flux_wall=flux_end, rho=nodes, w=w, flux=flux)


def _nodes(settings: SteadySettings, n_nodes: int | None) -> NDArray[np.float64]:
    count = n_nodes if n_nodes is not None else settings.n_nodes
    if count < 3:
        raise InvalidInputError(f"need at least 3 profile nodes, got {count}")
    return np.linspace(0.0, 1.0, count)


def shoot_steady(
    regime: FlowRegime,
    lambda_: float,
    u0: float,
    *,
    n_nodes: int | None = None,
    settings: SteadySettings | None = None,
) -> tuple[float, SteadyProfile]:
    """Integrate the steady equation from the axis value u0; the wall value is not imposed."""
    if not math.isfinite(lambda_) or lambda_ < 0.0:
        raise InvalidInputError(f"lambda must be nonnegative, got {lambda_}")
    if not math.isfinite(u0) or u0 < 0.0:
        raise InvalidInputError(f"u0 must be nonnegative, got {u0}")
    cfg = _settings(settings)
    mu = lambda_**2 * math.exp(u0)
    shot = _shoot_reduced(regime, mu, cfg, _nodes(cfg, n_nodes))
    assert shot.rho is not None and shot.w is not None and shot.flux is not None
    profile = SteadyProfile(
        rho_nodes=shot.rho,
        u_values=u0 + shot.w,
        flux_values=shot.flux,
        lambda_=lambda_,
        regime=regime,
        branch=None,
    )
    return u0 + shot.w_wall, profile


def _family_log_gap(
    regime: FlowRegime, log_mu: float, target: float, cfg: SteadySettings
) -> float:
    """ln(lambda^2(mu)) - target along the wall-satisfying family."""
    shot = _shoot_reduced(regime, math.exp(log_mu), cfg)
    return log_mu + shot.w_wall - target


def _profile_at(
    regime: FlowRegime,
    lambda_: float,
    log_mu: float,
    branch: Branch,
    cfg: SteadySettings,
    n_nodes: int | None,
) -> SteadyProfile:
    shot = _shoot_reduced(regime, math.exp(log_mu), cfg, _nodes(cfg, n_nodes))
    assert shot.rho is not None and shot.w is not None and shot.flux is not None
    u = shot.w - shot.w_wall
    u[-1] = 0.0
    return SteadyProfile(
        rho_nodes=shot.rho,
        u_values=u,
        flux_values=shot.flux,
        lambda_=lambda_,
        regime=regime,
        branch=branch,
    )


def solve_steady(
    regime: FlowRegime,
    lambda_: float,
    *,
    branch: Branch | str = Branch.LOWER,
    n_nodes: int | None = None,
    settings: SteadySettings | None = None,
) -> SteadyProfile | NoSolution:
    if not math.isfinite(lambda_) or lambda_ <= 0.0:
        raise InvalidInputError(f"lambda must be positive, got {lambda_}")
    branch = Branch(branch)
    cfg = _settings(settings)
    target = 2.0 * math.log(lambda_)

    def gap(s: float) -> float:
        return _family_log_gap(regime, s, target, cfg)

    # lambda^2(mu) <= mu, so the family sits below the target at mu = lambda^2
    step = math.log(_MU_GROWTH)
    s_hist = [target]
    g_hist = [gap(target)]
    lower: float | None = None
    while lower is None:
        s_next = s_hist[-1] + step
        if s_next > math.log(_MU_CEILING):
            raise SolverError(f"steady family scan left the range mu < {_MU_CEILING:g}")
        g_next = gap(s_next)
        s_hist.append(s_next)
        g_hist.append(g_next)
        if g_next > 0.0:
            lower = brentq(gap, s_hist[-2], s_next, xtol=1e-13)
            break
        if len(g_hist) >= 3 and g_hist[-1] < g_hist[-2]:
            a, b = s_hist[-3], s_hist[-1]
            peak = minimize_scalar(
                lambda s: -gap(s), bounds=(a, b), method="bounded", options={"xatol": 1e-10}
            )
            g_peak = -float(peak.fun)
            if g_peak > cfg.criticality_tol:
                s_hist[-1], g_hist[-1] = float(peak.x), g_peak
                lower = brentq(gap, s_hist[-3], float(peak.x), xtol=1e-13)
                break
            max_lambda = math.exp(0.5 * (g_peak + target))
            if g_peak > -cfg.criticality_tol:
                u_lo = -_shoot_reduced(regime, math.exp(a), cfg).w_wall
                u_hi = -_shoot_reduced(regime, math.exp(b), cfg).w_wall
                raise AtCriticalityError(
                    f"lambda={lambda_:.10g} is critical within tolerance", bracket=(u_lo, u_hi)
                )
            logger.debug("lambda=%.6g is supercritical (family max %.6g)", lambda_, max_lambda)
            return NoSolution(lambda_=lambda_, regime=regime, max_lambda_seen=max_lambda)

    if branch is Branch.LOWER:
        return _profile_at(regime, lambda_, lower, Branch.LOWER, cfg, n_nodes)

    # walk past the peak until the family falls below the target again
    s_prev, g_prev = s_hist[-1], g_hist[-1]
    while True:
        s_next = s_prev + step
        if s_next > math.log(_MU_CEILING):
            raise SolverError("upper steady branch not bracketed")
        g_next = gap(s_next)
        if g_next < 0.0 <= g_prev:
            upper = brentq(gap, s_prev, s_next, xtol=1e-13)
            return _profile_at(regime, lambda_, upper, Branch.UPPER, cfg, n_nodes)
        s_prev, g_prev = s_next, g_next


def _mu_for_u0(regime: FlowRegime, u0: float, cfg: SteadySettings) -> float:
    """Log of the family parameter mu whose wall-satisfying member has axis value u0."""
    if not math.isfinite(u0) or u0 <= 0.0:
        raise InvalidInputError(f"u0 must be positive, got {u0}")

    def gap(s: float) -> float:
        return u0 + _shoot_reduced(regime, math.exp(s), cfg).w_wall

    low = math.log(u0) - 2.0
    while gap(low) <= 0.0:
        low -= 2.0
    high = low
    while True:
        high += 2.0
        if high > math.log(_MU_CEILING):
            raise SolverError(f"no family member reaches u0={u0}")
        if gap(high) < 0.0:
            break
        low = high
    return float(brentq(gap, low, high, xtol=1e-13))


def lambda_of_u0(regime: FlowRegime, u0: float, *, settings: SteadySettings | None = None) -> float:
    """The lambda for which the profile starting at u0 meets u(1) = 0."""
    cfg = _settings(settings)
    s = _mu_for_u0(regime, u0, cfg)
    return math.exp(0.5 * s - 0.5 * u0)


def _first_fold(lams: NDArray[np.float64]) -> int:
    """Index of the first local maximum of the sampled lambda(u0) curve.

    0 means the curve already falls at the low end; the last index means it never turns.
    """
    scale = max(float(np.max(np.abs(lams))), 1.0)
    rising = np.diff(lams) > 1e-12 * scale
    if not rising[0]:
        return 0
    turns = np.flatnonzero(~rising)
    return int(turns[0]) if turns.size else len(lams) - 1


def critical_lambda(
    regime: FlowRegime, *, settings: SteadySettings | None = None
) -> EnvelopeResult:
    cfg = _settings(settings)
    u_low, u_high = cfg.u0_scan
    for _ in range(4):
        s_low = _mu_for_u0(regime, u_low, cfg)
        s_high = _mu_for_u0(regime, u_high, cfg)
        grid = np.linspace(s_low, s_high, cfg.scan_points)
        walls = np.array([_shoot_reduced(regime, math.exp(s), cfg).w_wall for s in grid])
        u0s = -walls
        lams = np.exp(0.5 * (grid + walls))
        idx = _first_fold(lams)
        if idx == 0:
            logger.info("envelope maximum at the low end of the u0 scan; widening")
            u_low /= 10.0
            continue
        if idx == len(grid) - 1:
            logger.info("envelope maximum at the high end of the u0 scan; widening")
            u_high *= 3.0
            continue
        break
    else:
        raise EnvelopeError("envelope maximum not enclosed by the widened u0 scan")

    def neg_log_lambda(s: float) -> float:
        return -0.5 * (s + _shoot_reduced(regime, math.exp(s), cfg).w_wall)

    try:
        best = minimize_scalar(
            neg_log_lambda,
            bracket=(grid[idx - 1], grid[idx], grid[idx + 1]),
            method="golden",
            options={"xtol": cfg.golden_tol},
        )
    except ValueError:
        # flat top: the golden bracket conditions fail on ties
        best = minimize_scalar(
            neg_log_lambda,
            bounds=(grid[idx - 1], grid[idx + 1]),
            method="bounded",
            options={"xatol": cfg.golden_tol},
        )
    s_cr = float(best.x)
    lambda_cr = math.exp(-float(best.fun))
    if lambda_cr < lams[idx]:
        s_cr, lambda_cr = float(grid[idx]), float(lams[idx])
    u0_cr = -_shoot_reduced(regime, math.exp(s_cr), cfg).w_wall
    order = np.argsort(u0s)
    curve = tuple((float(u0s[i]), float(lams[i])) for i in order)
    logger.info("lambda_cr=%.8g at u0=%.6g (%s)", lambda_cr, u0_cr, regime.describe())
    return EnvelopeResult(lambda_cr=lambda_cr, u0_at_cr=u0_cr, curve=curve, regime=regime)


def critical_lambda_vs_re(
    re_values: Iterable[float], *, settings: SteadySettings | None = None
) -> list[EnvelopeResult]:
    return [critical_lambda(Turbulent.from_re(re), settings=settings) for re in re_values]


__all__ = [
    "Branch",
    "EnvelopeResult",
    "NoSolution",
    "SteadyProfile",
    "critical_lambda",
    "critical_lambda_vs_re",
    "lambda_of_u0",
    "shoot_steady",
    "solve_steady",
]
