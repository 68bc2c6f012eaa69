from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Optional

import typer

from thermx_core.errors import ConfigError
from thermx_core.log import configure_logging

from .config import Command, parse_config
from .runner import EXIT_INVALID, run

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="thermx",
    help="Thermal explosion of a reacting gas in pipe flow: criticality and safe reactor length.",
    no_args_is_help=True,
    add_completion=False,
)

ConfigOption = typer.Option(None, "--config", "-c", help="key = value run configuration file")
RegimeOption = typer.Option(None, "--regime", help="laminar or turbulent")
ReOption = typer.Option(None, "--re", help="Reynolds number (turbulent regime)")
OutOption = typer.Option(None, "--out", "-o", help="CSV output path")
JsonOption = typer.Option(None, "--json-out", help="JSON summary path")
NRhoOption = typer.Option(None, "--n-rho", help="radial node count")
NXiOption = typer.Option(None, "--n-xi", help="axial layer count")
RelTolOption = typer.Option(None, "--rel-tol", help="relative bracket width for zeta0")
SettingsOption = typer.Option(None, "--settings", help="YAML file replacing the solver defaults")


@app.callback()
def _root(
    log_level: str = typer.Option("WARNING", "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
) -> None:
    try:
        configure_logging(log_level)
    except ValueError as exc:
        raise typer.BadParameter(str(exc), param_hint="--log-level") from exc


def _dispatch(command: Command, config_path: Optional[Path], **overrides: Any) -> None:
    text = ""
    if config_path is not None:
        if not config_path.exists():
            logger.error("config file not found: %s", config_path)
            raise typer.Exit(EXIT_INVALID)
        text = config_path.read_text(encoding="utf-8")
    flags = {k: v for k, v in overrides.items() if v is not None and v is not False}
    try:
        config = parse_config(text, {"command": command.value, **flags})
    except ConfigError as exc:
        logger.error("%s", exc)
        raise typer.Exit(EXIT_INVALID) from exc
    result = run(config)
    typer.echo(result.summary_line())
    if result.exit_code:
        raise typer.Exit(result.exit_code)


@app.command("steady")
def steady(
    lambda_: Optional[float] = typer.Option(None, "--lambda", help="dimensionless radius"),
    branch: Optional[str] = typer.Option(None, "--branch", help="lower (default) or upper"),
    n_nodes: Optional[int] = typer.Option(None, "--n-nodes", help="output node count"),
    regime: Optional[str] = RegimeOption,
    re: Optional[float] = ReOption,
    out: Optional[Path] = OutOption,
    json_out: Optional[Path] = JsonOption,
    settings: Optional[Path] = SettingsOption,
    config: Optional[Path] = ConfigOption,
) -> None:
    """Steady radial profile with u = 0 at the wall."""
    _dispatch(
        Command.STEADY,
        config,
        lambda_=lambda_,
        branch=branch,
        n_nodes=n_nodes,
        regime=regime,
        re=re,
        out=out,
        json_out=json_out,
        settings=settings,
    )


@app.command("lambda-cr")
def lambda_cr(
    pde: bool = typer.Option(False, "--pde", help="also bisect lambda with the evolution solver"),
    re_list: Optional[str] = typer.Option(None, "--re-list", help="comma-separated Re values"),
    regime: Optional[str] = RegimeOption,
    re: Optional[float] = ReOption,
    n_rho: Optional[int] = NRhoOption,
    n_xi: Optional[int] = NXiOption,
    out: Optional[Path] = OutOption,
    json_out: Optional[Path] = JsonOption,
    settings: Optional[Path] = SettingsOption,
    config: Optional[Path] = ConfigOption,
) -> None:
    """Critical lambda from the steady envelope."""
    _dispatch(
        Command.LAMBDA_CR,
        config,
        pde=pde,
        re_list=re_list,
        regime=regime,
        re=re,
        n_rho=n_rho,
        n_xi=n_xi,
        out=out,
        json_out=json_out,
        settings=settings,
    )


@app.command("zeta0")
def zeta0(
    lambda_: Optional[float] = typer.Option(None, "--lambda", help="dimensionless radius"),
    field_out: Optional[Path] = typer.Option(None, "--field-out", help="last convergent field CSV"),
    regime: Optional[str] = RegimeOption,
    re: Optional[float] = ReOption,
    n_rho: Optional[int] = NRhoOption,
    n_xi: Optional[int] = NXiOption,
    rel_tol: Optional[float] = RelTolOption,
    json_out: Optional[Path] = JsonOption,
    settings: Optional[Path] = SettingsOption,
    config: Optional[Path] = ConfigOption,
) -> None:
    """Critical length zeta0 at one lambda."""
    _dispatch(
        Command.ZETA0,
        config,
        lambda_=lambda_,
        field_out=field_out,
        regime=regime,
        re=re,
        n_rho=n_rho,
        n_xi=n_xi,
        rel_tol=rel_tol,
        json_out=json_out,
        settings=settings,
    )


@app.command("sweep")
def sweep(
    lambdas: Optional[str] = typer.Option(None, "--lambdas", help="comma-separated lambda values"),
    sweep_from: Optional[float] = typer.Option(None, "--from", help="first lambda (log-spaced)"),
    sweep_to: Optional[float] = typer.Option(None, "--to", help="last lambda (log-spaced)"),
    sweep_points: Optional[int] = typer.Option(None, "--points", help="number of lambda values"),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", help="worker processes"),
    regime: Optional[str] = RegimeOption,
    re: Optional[float] = ReOption,
    n_rho: Optional[int] = NRhoOption,
    n_xi: Optional[int] = NXiOption,
    rel_tol: Optional[float] = RelTolOption,
    out: Optional[Path] = OutOption,
    json_out: Optional[Path] = JsonOption,
    settings: Optional[Path] = SettingsOption,
    config: Optional[Path] = ConfigOption,
) -> None:
    """Existence boundary zeta0(lambda) over a set of lambda values."""
    _dispatch(
        Command.SWEEP,
        config,
        lambdas=lambdas,
        sweep_from=sweep_from,
        sweep_to=sweep_to,
        sweep_points=sweep_points,
        jobs=jobs,
        regime=regime,
        re=re,
        n_rho=n_rho,
        n_xi=n_xi,
        rel_tol=rel_tol,
        out=out,
        json_out=json_out,
        settings=settings,
    )


@app.command("fit")
def fit(
    input_: Optional[Path] = typer.Option(None, "--in", help="curve CSV written by sweep"),
    lambda_min: Optional[float] = typer.Option(None, "--lambda-min", help="smallest fitted lambda"),
    weighted: bool = typer.Option(False, "--weighted", help="weight by bracket width"),
    out: Optional[Path] = OutOption,
    json_out: Optional[Path] = JsonOption,
    config: Optional[Path] = ConfigOption,
) -> None:
    """Power law zeta0 = A lambda^b over the tail of a curve."""
    _dispatch(
        Command.FIT,
        config,
        input=input_,
        lambda_min=lambda_min,
        weighted=weighted,
        out=out,
        json_out=json_out,
    )


@app.command("collapse")
def collapse(
    inputs: Optional[str] = typer.Option(None, "--inputs", help="comma-separated curve CSVs"),
    collapse_from: Optional[float] = typer.Option(None, "--from", help="smallest compared lambda"),
    collapse_to: Optional[float] = typer.Option(None, "--to", help="largest compared lambda"),
    collapse_points: Optional[int] = typer.Option(None, "--points", help="compared lambda count"),
    json_out: Optional[Path] = JsonOption,
    config: Optional[Path] = ConfigOption,
) -> None:
    """Largest relative spread of zeta0 across curves for different Re."""
    _dispatch(
        Command.COLLAPSE,
        config,
        inputs=inputs,
        collapse_from=collapse_from,
        collapse_to=collapse_to,
        collapse_points=collapse_points,
        json_out=json_out,
    )


@app.command("dimensional")
def dimensional(
    gas: Optional[Path] = typer.Option(None, "--gas", help="key = value gas description"),
    zeta0_: Optional[float] = typer.Option(None, "--zeta0", help="skip the solve, use this zeta0"),
    regime: Optional[str] = RegimeOption,
    n_rho: Optional[int] = NRhoOption,
    n_xi: Optional[int] = NXiOption,
    rel_tol: Optional[float] = RelTolOption,
    json_out: Optional[Path] = JsonOption,
    settings: Optional[Path] = SettingsOption,
    config: Optional[Path] = ConfigOption,
) -> None:
    """Dimensional lambda and critical reactor length for a gas."""
    _dispatch(
        Command.DIMENSIONAL,
        config,
        gas=gas,
        zeta0=zeta0_,
        regime=regime,
        n_rho=n_rho,
        n_xi=n_xi,
        rel_tol=rel_tol,
        json_out=json_out,
        settings=settings,
    )


def main() -> None:
    app()


if __name__ == "__main__":
    main()
