from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import ValidationError

from thermx_core import __version__
from thermx_core.artifacts import write_csv, write_json
from thermx_core.criticality import (
    ExistencePoint,
    find_zeta0,
    lambda_cr_consistency,
    load_curve_csv,
    sweep_boundary,
)
from thermx_core.errors import InvalidInputError, SolverError, ThermxError, TooSupercriticalError
from thermx_core.grid import GridSpec
from thermx_core.model import (
    PipeProblem,
    Turbulent,
    dimensional_critical_length,
    lambda_from_gas,
)
from thermx_core.scaling import collapse_spread, exponent_sensitivity, fit_power_law
from thermx_core.steady import NoSolution, critical_lambda, critical_lambda_vs_re, solve_steady

from .config import Command, RunConfig, parse_gas

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SOLVER = 2
EXIT_NO_SOLUTION = 3

FIT_COLUMNS = ["fit", "prefactor", "exponent", "lambda_min", "rms_log_residual", "n_points"]


@dataclass(slots=True)
class RunResult:
    exit_code: int
    summary: dict[str, Any]
    outputs: list[Path] = field(default_factory=list)

    def summary_line(self) -> str:
        return " ".join(f"{key}={_format(value)}" for key, value in self.summary.items())


def _format(value: Any) -> str:
    if isinstance(value, float):
        return "inf" if math.isinf(value) else f"{value:.10g}"
    return str(value)


class _Outputs:
    def __init__(self) -> None:
        self.paths: list[Path] = []

    def csv(self, frame: pd.DataFrame, destination: Path | None) -> None:
        if destination is not None:
            self.paths.append(write_csv(frame, destination))

    def json(self, data: dict[str, Any], destination: Path | None) -> None:
        if destination is not None:
            self.paths.append(write_json(data, destination))


def _grid(config: RunConfig, regime: Any) -> GridSpec:
    settings = config.solver_settings()
    return GridSpec.for_regime(regime, settings.grid.n_rho, settings.grid.n_xi)


def _run_steady(config: RunConfig, out: _Outputs) -> RunResult:
    regime = config.flow_regime()
    assert config.lambda_ is not None
    result = solve_steady(
        regime,
        config.lambda_,
        branch=config.branch,
        n_nodes=config.n_nodes,
        settings=config.solver_settings().steady,
    )
    summary: dict[str, Any] = {"command": config.command.value, "lambda": config.lambda_}
    if isinstance(result, NoSolution):
        logger.error(result.message)
        summary.update(status="no-solution", max_lambda=result.max_lambda_seen)
        return RunResult(EXIT_NO_SOLUTION, summary)
    out.csv(result.to_frame(), config.out)
    out.json(
        {
            "lambda": result.lambda_,
            "regime": regime.describe(),
            "branch": str(result.branch),
            "u0": result.u0,
            "rho": result.rho_nodes,
            "u": result.u_values,
        },
        config.json_out,
    )
    summary.update(status="ok", branch=result.branch, u0=result.u0)
    return RunResult(EXIT_OK, summary)


def _run_lambda_cr(config: RunConfig, out: _Outputs) -> RunResult:
    settings = config.solver_settings()
    summary: dict[str, Any] = {"command": config.command.value}
    if config.re_list:
        results = critical_lambda_vs_re(config.re_list, settings=settings.steady)
        rows = []
        for envelope in results:
            assert isinstance(envelope.regime, Turbulent)
            rows.append(
                {
                    "re": envelope.regime.re,
                    "alpha": envelope.regime.alpha,
                    "lambda_cr": envelope.lambda_cr,
                    "lambda_cr_squared": envelope.lambda_cr**2,
                    "u0": envelope.u0_at_cr,
                }
            )
        frame = pd.DataFrame(rows, columns=["re", "alpha", "lambda_cr", "lambda_cr_squared", "u0"])
        out.csv(frame, config.out)
        out.json({"rows": rows}, config.json_out)
        summary.update(status="ok", points=len(rows))
        return RunResult(EXIT_OK, summary)

    regime = config.flow_regime()
    envelope = critical_lambda(regime, settings=settings.steady)
    summary.update(status="ok", regime=regime.kind)
    if isinstance(regime, Turbulent):
        summary.update(re=regime.re, alpha=regime.alpha)
    summary.update(lambda_cr=envelope.lambda_cr, u0=envelope.u0_at_cr)
    payload: dict[str, Any] = {
        "regime": regime.describe(),
        "lambda_cr": envelope.lambda_cr,
        "u0": envelope.u0_at_cr,
    }
    if config.pde:
        report = lambda_cr_consistency(regime, _grid(config, regime), settings=settings)
        summary.update(lambda_cr_pde=report.lambda_cr_pde, rel_gap=report.rel_gap)
        payload.update(
            lambda_cr_pde=report.lambda_cr_pde, rel_gap=report.rel_gap, bracket=report.bracket
        )
    out.csv(envelope.to_frame(), config.out)
    out.json(payload, config.json_out)
    return RunResult(EXIT_OK, summary)


def _point_payload(point: ExistencePoint) -> dict[str, Any]:
    return {
        "lambda": point.lambda_,
        "zeta0": point.zeta0,
        "zeta0_lo": point.bracket[0],
        "zeta0_hi": point.bracket[1],
        "n_rho": point.grid.n_rho,
        "n_xi": point.grid.n_xi,
        "escalations": point.escalations,
        "bisections": point.bisections,
        "trials": point.trials,
        "newton_iterations": list(point.newton_iterations),
    }


def _run_zeta0(config: RunConfig, out: _Outputs) -> RunResult:
    regime = config.flow_regime()
    assert config.lambda_ is not None
    settings = config.solver_settings()
    result = find_zeta0(
        PipeProblem(config.lambda_, regime),
        _grid(config, regime),
        config.rel_tol,
        settings=settings,
    )
    summary: dict[str, Any] = {"command": config.command.value, "lambda": config.lambda_}
    if not isinstance(result, ExistencePoint):
        summary.update(status="unbounded", zeta0=math.inf, zeta_cap=result.zeta_cap)
        return RunResult(EXIT_OK, summary)
    payload = _point_payload(result)
    if result.field is not None:
        out.csv(result.field.to_frame(), config.field_out)
        payload["field"] = result.field.summary()
    out.json(payload, config.json_out)
    summary.update(status="ok", zeta0=result.zeta0, zeta0_lo=result.bracket[0])
    summary.update(zeta0_hi=result.bracket[1], n_xi=result.grid.n_xi)
    return RunResult(EXIT_OK, summary)


def _run_sweep(config: RunConfig, out: _Outputs) -> RunResult:
    regime = config.flow_regime()
    lambdas = config.sweep_lambdas()
    curve = sweep_boundary(
        regime,
        lambdas,
        _grid(config, regime),
        rel_tol=config.rel_tol,
        jobs=config.effective_jobs(),
        settings=config.solver_settings(),
    )
    out.csv(curve.to_frame(), config.out)
    out.json(
        {
            "metadata": curve.metadata,
            "failures": [{"lambda": v, "error": e} for v, e in curve.failures],
            "unbounded": list(curve.unbounded),
            "points": [_point_payload(p) for p in curve.points],
            "version": __version__,
        },
        config.json_out,
    )
    summary: dict[str, Any] = {
        "command": config.command.value,
        "status": "ok" if curve.points else "failed",
        "points": len(curve),
        "failures": len(curve.failures),
        "unbounded": len(curve.unbounded),
        "decreasing": curve.is_strictly_decreasing(),
    }
    code = EXIT_OK if curve.points or not curve.failures else EXIT_SOLVER
    return RunResult(code, summary)


def _run_fit(config: RunConfig, out: _Outputs) -> RunResult:
    assert config.input is not None
    curve = load_curve_csv(config.input)
    fit = fit_power_law(curve, config.lambda_min, weighted=config.weighted)
    sensitivity = exponent_sensitivity(curve)
    rows = [{"fit": "selected", **fit.to_dict()}]
    rows += [{"fit": f"lambda>={key:g}", **f.to_dict()} for key, f in sensitivity.items()]
    out.csv(pd.DataFrame(rows, columns=FIT_COLUMNS), config.out)
    out.json(
        {
            **fit.to_dict(),
            "weighted": config.weighted,
            "sensitivity": [f.to_dict() for f in sensitivity.values()],
        },
        config.json_out,
    )
    summary: dict[str, Any] = {"command": config.command.value, "status": "ok", **fit.to_dict()}
    return RunResult(EXIT_OK, summary)


def _run_collapse(config: RunConfig, out: _Outputs) -> RunResult:
    curves = [load_curve_csv(path) for path in config.inputs]
    grid = config.collapse_grid()
    spread = collapse_spread(curves, grid)
    out.json(
        {
            "inputs": [str(p) for p in config.inputs],
            "lambda_grid": grid,
            "max_rel_spread": spread,
        },
        config.json_out,
    )
    summary: dict[str, Any] = {
        "command": config.command.value,
        "status": "ok",
        "curves": len(curves),
        "spread": spread,
    }
    return RunResult(EXIT_OK, summary)


def _run_dimensional(config: RunConfig, out: _Outputs) -> RunResult:
    assert config.gas is not None
    if not config.gas.exists():
        raise FileNotFoundError(f"gas file not found: {config.gas}")
    gas = parse_gas(config.gas.read_text(encoding="utf-8"))
    scale = lambda_from_gas(gas, config.regime)
    regime = scale.regime
    summary: dict[str, Any] = {
        "command": config.command.value,
        "lambda": scale.lambda_,
        "ell": scale.ell,
        "re": gas.reynolds,
    }
    payload: dict[str, Any] = {
        "regime": regime.describe(),
        "lambda": scale.lambda_,
        "ell": scale.ell,
        "reynolds": gas.reynolds,
        "phi": gas.phi,
    }
    zeta0 = config.zeta0
    if zeta0 is None:
        settings = config.solver_settings()
        lambda_cr = critical_lambda(regime, settings=settings.steady).lambda_cr
        payload["lambda_cr"] = lambda_cr
        if scale.lambda_ <= lambda_cr:
            summary.update(status="subcritical", lambda_cr=lambda_cr)
            out.json(payload, config.json_out)
            return RunResult(EXIT_OK, summary)
        result = find_zeta0(
            PipeProblem(scale.lambda_, regime), _grid(config, regime), config.rel_tol, settings=settings
        )
        if not isinstance(result, ExistencePoint):
            summary.update(status="unbounded", zeta0=math.inf)
            out.json(payload, config.json_out)
            return RunResult(EXIT_OK, summary)
        zeta0 = result.zeta0
    length = dimensional_critical_length(gas, regime, zeta0)
    payload.update(zeta0=zeta0, critical_length=length)
    summary.update(status="ok", zeta0=zeta0, z0=length)
    out.json(payload, config.json_out)
    return RunResult(EXIT_OK, summary)


_HANDLERS: dict[Command, Callable[[RunConfig, _Outputs], RunResult]] = {
    Command.STEADY: _run_steady,
    Command.LAMBDA_CR: _run_lambda_cr,
    Command.ZETA0: _run_zeta0,
    Command.SWEEP: _run_sweep,
    Command.FIT: _run_fit,
    Command.COLLAPSE: _run_collapse,
    Command.DIMENSIONAL: _run_dimensional,
}


def run(config: RunConfig) -> RunResult:
    """Dispatch one command; failures become exit codes with the error logged."""
    outputs = _Outputs()
    summary: dict[str, Any] = {"command": config.command.value}
    try:
        result = _HANDLERS[config.command](config, outputs)
    except (
        InvalidInputError,
        ValidationError,
        FileNotFoundError,
        pd.errors.ParserError,
        pd.errors.EmptyDataError,
    ) as exc:
        logger.error("%s", exc)
        return RunResult(EXIT_INVALID, {**summary, "status": "invalid-input"})
    except TooSupercriticalError as exc:
        logger.error("%s", exc)
        return RunResult(EXIT_NO_SOLUTION, {**summary, "status": "too-supercritical"})
    except SolverError as exc:
        logger.error("%s", exc)
        return RunResult(EXIT_SOLVER, {**summary, "status": "solver-failure"})
    except ThermxError as exc:
        logger.error("%s", exc)
        return RunResult(EXIT_SOLVER, {**summary, "status": "error"})
    result.outputs = outputs.paths
    return result


__all__ = [
    "EXIT_INVALID",
    "EXIT_NO_SOLUTION",
    "EXIT_OK",
    "EXIT_SOLVER",
    "RunResult",
    "run",
]
