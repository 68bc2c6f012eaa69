"""Existence boundary zeta0(lambda) of the evolution problem.

For fixed lambda the solution exists on [0, zeta] for zeta below a finite zeta0 when the flow
is supercritical. zeta0 is located by continuation in the rescaled length: double zeta0 with warm
starts while Newton converges, then bisect the first convergent/divergent pair geometrically.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from .config import SolverSettings, default_settings
from .errors import CriticalityError, InvalidInputError, ThermxError, TooSupercriticalError
from .grid import Converged, Diverged, Field2D, GridSpec, SolveOutcome, newton_solve
from .model import FlowRegime, Laminar, PipeProblem
from .steady import critical_lambda

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["lambda", "zeta0", "zeta0_lo", "zeta0_hi", "n_rho", "n_xi"]


@dataclass(frozen=True, slots=True)
class ExistencePoint:
    lambda_: float
    zeta0: float
    bracket: tuple[float, float]
    grid: GridSpec
    regime: FlowRegime
    escalations: int = 0
    bisections: int = 0
    trials: int = 0
    newton_iterations: tuple[int, ...] = dataclasses.field(default=(), compare=False, repr=False)
    field: Field2D | None = dataclasses.field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        lo, hi = self.bracket
        if not 0.0 < lo < self.zeta0 <= hi:
            raise InvalidInputError(f"inconsistent bracket {self.bracket} for zeta0={self.zeta0}")


@dataclass(frozen=True, slots=True)
class Unbounded:
    """Newton converged all the way to the cap; the solution is taken to exist for every zeta."""

    lambda_: float
    regime: FlowRegime
    zeta_cap: float


@dataclass(frozen=True, slots=True, eq=False)
class BoundaryCurve:
    points: tuple[ExistencePoint, ...]
    regime: FlowRegime | None
    metadata: dict[str, Any] = dataclasses.field(default_factory=dict)
    failures: tuple[tuple[float, str], ...] = ()
    unbounded: tuple[float, ...] = ()

    @property
    def lambdas(self) -> NDArray[np.float64]:
        return np.array([p.lambda_ for p in self.points], dtype=float)

    @property
    def zeta0s(self) -> NDArray[np.float64]:
        return np.array([p.zeta0 for p in self.points], dtype=float)

    @property
    def log_widths(self) -> NDArray[np.float64]:
        return np.array([math.log(p.bracket[1] / p.bracket[0]) for p in self.points], dtype=float)

    def is_strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.zeta0s) < 0.0))

    def __len__(self) -> int:
        return len(self.points)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "lambda": p.lambda_,
                "zeta0": p.zeta0,
                "zeta0_lo": p.bracket[0],
                "zeta0_hi": p.bracket[1],
                "n_rho": p.grid.n_rho,
                "n_xi": p.grid.n_xi,
            }
            for p in self.points
        ]
        return pd.DataFrame(rows, columns=CURVE_COLUMNS)


@dataclass(slots=True)
class _Bracket:
    lo: float
    hi: float
    lo_outcome: Converged
    hi_outcome: Diverged
    trials: int = 0
    bisections: int = 0

    @property
    def lo_field(self) -> Field2D:
        return self.lo_outcome.field


def _attempt(
    problem: PipeProblem,
    grid: GridSpec,
    zeta0: float,
    warm: Field2D | None,
    settings: SolverSettings,
) -> SolveOutcome:
    outcome = newton_solve(problem, grid, zeta0, warm, settings=settings.newton)
    if isinstance(outcome, Diverged) and warm is not None:
        cold = newton_solve(problem, grid, zeta0, settings=settings.newton)
        if isinstance(cold, Converged):
            logger.debug("zeta0=%.6g converged only from a cold start", zeta0)
        return cold
    return outcome


def _search_bracket(
    problem: PipeProblem,
    grid: GridSpec,
    start: float,
    warm: Field2D | None,
    settings: SolverSettings,
) -> _Bracket | None:
    """Doubling (or halving) search for a convergent/divergent pair; None when the cap converges."""
    cfg = settings.continuation
    outcome = _attempt(problem, grid, start, warm, settings)
    trials = 1
    if isinstance(outcome, Converged):
        lo, lo_outcome = start, outcome
        while lo < cfg.zeta_cap:
            trial = min(2.0 * lo, cfg.zeta_cap)
            outcome = _attempt(problem, grid, trial, lo_outcome.field, settings)
            trials += 1
            if isinstance(outcome, Diverged):
                return _Bracket(lo, trial, lo_outcome, outcome, trials=trials)
            lo, lo_outcome = trial, outcome
        return None

    hi, hi_outcome = start, outcome
    while True:
        trial = 0.5 * hi
        if trial < cfg.zeta_floor:
            raise TooSupercriticalError(
                "Newton diverged down to the smallest trial length; refine the grid",
                lambda_=problem.lambda_,
                zeta0=hi,
            )
        outcome = _attempt(problem, grid, trial, None, settings)
        trials += 1
        if isinstance(outcome, Converged):
            return _Bracket(trial, hi, outcome, hi_outcome, trials=trials)
        hi, hi_outcome = trial, outcome


def _bisect(
    problem: PipeProblem,
    grid: GridSpec,
    bracket: _Bracket,
    rel_tol: float,
    settings: SolverSettings,
) -> _Bracket:
    while bracket.hi / bracket.lo - 1.0 > rel_tol:
        mid = math.sqrt(bracket.lo * bracket.hi)
        outcome = _attempt(problem, grid, mid, bracket.lo_field, settings)
        bracket.trials += 1
        bracket.bisections += 1
        if isinstance(outcome, Converged):
            bracket.lo, bracket.lo_outcome = mid, outcome
        else:
            bracket.hi, bracket.hi_outcome = mid, outcome
    return bracket


def _needs_finer_xi(
    problem: PipeProblem,
    grid: GridSpec,
    bracket: _Bracket,
    rel_tol: float,
    settings: SolverSettings,
) -> bool:
    """True when doubling n_xi moves a last-layer failure beyond the bracket by more than rel_tol."""
    if bracket.hi_outcome.last_good_layer <= settings.continuation.escalation_fraction * grid.n_xi:
        return False
    finer = grid.with_n_xi(2 * grid.n_xi)
    replay = newton_solve(problem, finer, bracket.hi * (1.0 + rel_tol), settings=settings.newton)
    bracket.trials += 1
    return isinstance(replay, Converged)


def find_zeta0(
    problem: PipeProblem,
    grid: GridSpec | None = None,
    rel_tol: float | None = None,
    *,
    start: float | None = None,
    warm_start: Field2D | None = None,
    settings: SolverSettings | None = None,
) -> ExistencePoint | Unbounded:
    cfg = settings if settings is not None else default_settings()
    if problem.lambda_ <= 0.0:
        raise InvalidInputError(f"find_zeta0 needs lambda > 0, got {problem.lambda_}")
    tol = cfg.continuation.rel_tol if rel_tol is None else rel_tol
    if not 1.0e-4 < tol <= 0.1:
        raise InvalidInputError(f"rel_tol must lie in (1e-4, 0.1], got {tol}")
    grid = grid if grid is not None else GridSpec.for_regime(problem.regime)
    start = cfg.continuation.zeta_start if start is None else start
    if not cfg.continuation.zeta_floor <= start <= cfg.continuation.zeta_cap:
        raise InvalidInputError(f"start zeta0 {start} outside the searched range")

    escalations, trials, bisections = 0, 0, 0
    while True:
        bracket = _search_bracket(problem, grid, start, warm_start, cfg)
        if bracket is None:
            logger.info(
                "lambda=%.6g: converged up to zeta_cap=%g", problem.lambda_, cfg.continuation.zeta_cap
            )
            return Unbounded(problem.lambda_, problem.regime, cfg.continuation.zeta_cap)
        bracket = _bisect(problem, grid, bracket, tol, cfg)
        escalate = escalations == 0 and _needs_finer_xi(problem, grid, bracket, tol, cfg)
        trials += bracket.trials
        bisections += bracket.bisections
        if not escalate:
            break
        escalations += 1
        grid = grid.with_n_xi(2 * grid.n_xi)
        start = min(bracket.hi * (1.0 + tol), cfg.continuation.zeta_cap)
        warm_start = None
        logger.debug("lambda=%.6g: escalating to n_xi=%d", problem.lambda_, grid.n_xi)

    zeta0 = math.sqrt(bracket.lo * bracket.hi)
    logger.info(
        "lambda=%.6g: zeta0=%.6g in [%.6g, %.6g]", problem.lambda_, zeta0, bracket.lo, bracket.hi
    )
    return ExistencePoint(
        lambda_=problem.lambda_,
        zeta0=zeta0,
        bracket=(bracket.lo, bracket.hi),
        grid=grid,
        regime=problem.regime,
        escalations=escalations,
        bisections=bisections,
        trials=trials,
        newton_iterations=tuple(int(v) for v in bracket.lo_outcome.newton_iters_per_layer),
        field=bracket.lo_field,
    )


def _sweep_one(
    job: tuple[FlowRegime, float, GridSpec, float | None, SolverSettings],
) -> tuple[ExistencePoint | Unbounded | None, str | None]:
    regime, lambda_, grid, rel_tol, settings = job
    try:
        result = find_zeta0(PipeProblem(lambda_, regime), grid, rel_tol, settings=settings)
    except ThermxError as exc:
        return None, str(exc)
    if isinstance(result, ExistencePoint):
        result = dataclasses.replace(result, field=None)
    return result, None


def sweep_boundary(
    regime: FlowRegime,
    lambdas: Sequence[float],
    grid: GridSpec | None = None,
    *,
    rel_tol: float | None = None,
    jobs: int = 1,
    settings: SolverSettings | None = None,
) -> BoundaryCurve:
    cfg = settings if settings is not None else default_settings()
    values = [float(v) for v in lambdas]
    if any(not math.isfinite(v) or v <= 0.0 for v in values):
        raise InvalidInputError("sweep lambdas must be finite and positive")
    if any(b <= a for a, b in zip(values, values[1:], strict=False)):
        raise InvalidInputError("sweep lambdas must be strictly ascending")
    if jobs < 1:
        raise InvalidInputError(f"jobs must be >= 1, got {jobs}")
    grid = grid if grid is not None else GridSpec.for_regime(regime)

    results: list[tuple[float, ExistencePoint | Unbounded | None, str | None]] = []
    if jobs > 1 and len(values) > 1:
        work = [(regime, v, grid, rel_tol, cfg) for v in values]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for v, (result, error) in zip(values, pool.map(_sweep_one, work), strict=True):
                results.append((v, result, error))
    else:
        previous: ExistencePoint | None = None
        for v in values:
            problem = PipeProblem(v, regime)
            try:
                if previous is None:
                    result = find_zeta0(problem, grid, rel_tol, settings=cfg)
                else:
                    result = find_zeta0(
                        problem,
                        grid,
                        rel_tol,
                        start=previous.bracket[0],
                        warm_start=previous.field,
                        settings=cfg,
                    )
            except ThermxError as exc:
                logger.warning("lambda=%.6g: %s", v, exc)
                results.append((v, None, str(exc)))
                continue
            if isinstance(result, ExistencePoint):
                previous = result
            results.append((v, result, None))

    points = tuple(r for _, r, _ in results if isinstance(r, ExistencePoint))
    curve = BoundaryCurve(
        points=points,
        regime=regime,
        metadata={
            "regime": regime.describe(),
            "n_rho": grid.n_rho,
            "n_xi": grid.n_xi,
            "rho_stretch": grid.rho_stretch,
            "rel_tol": cfg.continuation.rel_tol if rel_tol is None else rel_tol,
            "newton_tol": cfg.newton.tol,
            "zeta_cap": cfg.continuation.zeta_cap,
        },
        failures=tuple((v, e) for v, _, e in results if e is not None),
        unbounded=tuple(v for v, r, _ in results if isinstance(r, Unbounded)),
    )
    if not curve.is_strictly_decreasing():
        logger.warning("zeta0 is not strictly decreasing over the sweep; check the grid")
    return curve


@dataclass(frozen=True, slots=True)
class CriticalityReport:
    lambda_cr_pde: float
    lambda_cr_steady: float
    rel_gap: float
    bracket: tuple[float, float]


def lambda_cr_consistency(
    regime: FlowRegime,
    grid: GridSpec | None = None,
    *,
    settings: SolverSettings | None = None,
) -> CriticalityReport:
    """Locate the smallest lambda with a finite zeta0 and compare it with the steady fold."""
    cfg = settings if settings is not None else default_settings()
    grid = grid if grid is not None else GridSpec.for_regime(regime)
    steady = critical_lambda(regime, settings=cfg.steady).lambda_cr

    def bounded(lambda_: float) -> bool:
        problem = PipeProblem(lambda_, regime)
        return _search_bracket(problem, grid, cfg.continuation.zeta_start, None, cfg) is not None

    lo, hi = 0.95 * steady, 1.05 * steady
    for _ in range(8):
        if not bounded(lo):
            break
        lo *= 0.9
    else:
        raise CriticalityError(f"finite zeta0 found down to lambda={lo:.6g}")
    for _ in range(8):
        if bounded(hi):
            break
        hi *= 1.1
    else:
        raise CriticalityError(f"no finite zeta0 found up to lambda={hi:.6g}")

    while hi / lo - 1.0 > cfg.continuation.lambda_rel_tol:
        mid = math.sqrt(lo * hi)
        if bounded(mid):
            hi = mid
        else:
            lo = mid
    if bounded(lo) or not bounded(hi):
        raise CriticalityError(
            f"existence is not monotone in lambda around [{lo:.6g}, {hi:.6g}]"
        )
    pde = math.sqrt(lo * hi)
    gap = abs(pde - steady) / steady
    logger.info("lambda_cr: PDE %.6g, steady %.6g, gap %.2e", pde, steady, gap)
    return CriticalityReport(lambda_cr_pde=pde, lambda_cr_steady=steady, rel_gap=gap, bracket=(lo, hi))


def load_curve_csv(path: str | Path, regime: FlowRegime | None = None) -> BoundaryCurve:
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"curve file not found: {source}")
    try:
        frame = pd.read_csv(source, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise InvalidInputError(f"{source}: unreadable curve file ({exc})") from exc
    missing = [c for c in CURVE_COLUMNS if c not in frame.columns]
    if missing:
        raise InvalidInputError(f"{source}: missing columns {', '.join(missing)}")
    frame = frame[CURVE_COLUMNS].apply(pd.to_numeric, errors="coerce")
    bad = frame.index[frame.isna().any(axis=1)]
    if len(bad):
        raise InvalidInputError(f"{source}: non-numeric values in data row {int(bad[0]) + 1}")
    stretch = None
    if regime is not None and not isinstance(regime, Laminar):
        stretch = GridSpec.for_regime(regime).rho_stretch
    points: list[ExistencePoint] = []
    placeholder = regime if regime is not None else Laminar()
    for row in frame.sort_values("lambda").to_dict("records"):
        points.append(
            ExistencePoint(
                lambda_=float(row["lambda"]),
                zeta0=float(row["zeta0"]),
                bracket=(float(row["zeta0_lo"]), float(row["zeta0_hi"])),
                grid=GridSpec(int(row["n_rho"]), int(row["n_xi"]), stretch),
                regime=placeholder,
            )
        )
    return BoundaryCurve(points=tuple(points), regime=regime, metadata={"source": str(source)})


__all__ = [
    "CURVE_COLUMNS",
    "BoundaryCurve",
    "CriticalityReport",
    "ExistencePoint",
    "Unbounded",
    "find_zeta0",
    "lambda_cr_consistency",
    "load_curve_csv",
    "sweep_boundary",
]
