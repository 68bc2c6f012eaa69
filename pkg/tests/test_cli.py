import json
import logging
import math

import numpy as np
import pandas as pd
import pytest
from rich.logging import RichHandler
from typer.testing import CliRunner

from thermx_cli import Command, RunResult, parse_config, parse_gas, run
from thermx_cli.main import app
from thermx_cli.runner import EXIT_INVALID, EXIT_NO_SOLUTION, EXIT_OK
from thermx_core.errors import ConfigError
from thermx_core.log import LOGGER_NAMES

runner = CliRunner()

NU = 1.4e-5
KAPPA = 2.0e-5


@pytest.fixture(autouse=True)
def _reset_package_loggers():
    yield
    for name in LOGGER_NAMES:
        logger = logging.getLogger(name)
        for handler in list(logger.handlers):
            if isinstance(handler, RichHandler):
                logger.removeHandler(handler)
        logger.setLevel(logging.NOTSET)
        logger.propagate = True


def summary_of(result):
    lines = [line for line in result.output.splitlines() if line.startswith("command=")]
    assert len(lines) == 1, result.output
    return dict(item.split("=", 1) for item in lines[0].split())


def write_curve(path, lambdas, zeta0s):
    zeta = np.asarray(zeta0s, dtype=float)
    frame = pd.DataFrame(
        {
            "lambda": lambdas,
            "zeta0": zeta,
            "zeta0_lo": zeta / 1.001,
            "zeta0_hi": zeta,
            "n_rho": 64,
            "n_xi": 64,
        }
    )
    frame.to_csv(path, index=False)
    return path


def gas_text(**overrides):
    t0, phi, radius = 500.0, 20.0, 0.01
    values = {
        "heat_capacity": 1000.0,
        "molecular_diffusivity": KAPPA,
        "kinematic_viscosity": NU,
        "heat_of_reaction": 1.0,
        "preexponential": math.exp(phi) * KAPPA * t0 * 1000.0 / phi,
        "activation_energy": phi * 8.314462618 * t0,
        "wall_temperature": t0,
        "pipe_radius": radius,
        "discharge": 1000.0 * math.pi * radius * NU / 2.0,
    }
    values.update(overrides)
    return "".join(f"{key} = {value!r}\n" for key, value in values.items())


def test_lambda_cr_laminar():
    result = runner.invoke(app, ["lambda-cr"])
    assert result.exit_code == EXIT_OK, result.output
    summary = summary_of(result)
    assert summary["command"] == "lambda-cr"
    assert summary["regime"] == "laminar"
    assert float(summary["lambda_cr"]) == pytest.approx(1.41421, abs=1e-4)


def test_lambda_cr_over_reynolds_list(tmp_path):
    out = tmp_path / "lcr.csv"
    result = runner.invoke(app, ["lambda-cr", "--re-list", "1e4,1e6", "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["re", "alpha", "lambda_cr", "lambda_cr_squared", "u0"]
    assert frame["re"].tolist() == [1.0e4, 1.0e6]
    np.testing.assert_allclose(frame["lambda_cr_squared"], frame["lambda_cr"] ** 2)


def test_steady_profile_and_supercritical_exit(tmp_path):
    out = tmp_path / "profile.csv"
    result = runner.invoke(app, ["steady", "--lambda", "1", "--n-nodes", "101", "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    assert summary_of(result)["branch"] == "lower"
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["rho", "u"]
    assert len(frame) == 101
    assert frame["u"].iloc[-1] == 0.0

    result = runner.invoke(app, ["steady", "--lambda", "1.5"])
    assert result.exit_code == EXIT_NO_SOLUTION
    summary = summary_of(result)
    assert summary["status"] == "no-solution"
    assert float(summary["max_lambda"]) == pytest.approx(math.sqrt(2.0), rel=1e-4)


def test_missing_inputs_exit_with_invalid(tmp_path):
    result = runner.invoke(app, ["steady", "--config", str(tmp_path / "absent.cfg")])
    assert result.exit_code == EXIT_INVALID
    result = runner.invoke(app, ["steady"])
    assert result.exit_code == EXIT_INVALID
    result = runner.invoke(app, ["fit", "--in", str(tmp_path / "absent.csv")])
    assert result.exit_code == EXIT_INVALID
    assert summary_of(result)["status"] == "invalid-input"
    result = runner.invoke(app, ["--log-level", "LOUD", "lambda-cr"])
    assert result.exit_code != EXIT_OK


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# laminar run\nlambda = 1.5\nbranch = lower\n", encoding="utf-8")
    result = runner.invoke(app, ["steady", "--config", str(cfg), "--lambda", "1.0"])
    assert result.exit_code == EXIT_OK, result.output
    assert float(summary_of(result)["lambda"]) == 1.0


def test_parse_config_values():
    config = parse_config("command = lambda-cr\nregime = turbulent\nre = 1e6\n")
    assert config.command is Command.LAMBDA_CR
    assert config.flow_regime().alpha == pytest.approx(0.108574, abs=1e-6)

    config = parse_config("", {"command": "lambda-cr"})
    assert config.regime == "laminar"
    assert config.sweep_points == 30

    config = parse_config("command = sweep\nn-rho = 64\nrel-tol = 0.01\nlambdas = 3, 2, 3\n")
    assert config.sweep_lambdas() == [2.0, 3.0]
    settings = config.solver_settings()
    assert settings.grid.n_rho == 64
    assert settings.continuation.rel_tol == 0.01

    config = parse_config("command = sweep\nsweep_from = 10\nsweep_to = 100\nsweep_points = 3\n")
    np.testing.assert_allclose(config.sweep_lambdas(), [10.0, math.sqrt(1000.0), 100.0])


def test_parse_config_errors():
    with pytest.raises(ConfigError) as info:
        parse_config("command = steady\nlambda = -1\n")
    assert info.value.line == 2
    assert info.value.key == "lambda"
    with pytest.raises(ConfigError) as info:
        parse_config("colour = red\n")
    assert info.value.line == 1
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("command = steady\nlambda = 1\nlambda = 2\n")
    with pytest.raises(ConfigError, match="missing value"):
        parse_config("command = steady\nlambda =\n")
    with pytest.raises(ConfigError, match="expected"):
        parse_config("command steady\n")
    with pytest.raises(ConfigError, match="required"):
        parse_config("command = zeta0\n")
    with pytest.raises(ConfigError, match="Reynolds"):
        parse_config("command = zeta0\nlambda = 3\nregime = turbulent\n")
    with pytest.raises(ConfigError, match="two curve files"):
        parse_config("command = collapse\ninputs = a.csv\n")
    with pytest.raises(ConfigError, match="no command"):
        parse_config("lambda = 1\n")


def test_jobs_precedence(monkeypatch):
    monkeypatch.setenv("THERMX_JOBS", "3")
    assert parse_config("command = sweep\n").effective_jobs() == 3
    assert parse_config("command = sweep\njobs = 2\n").effective_jobs() == 2
    assert parse_config("command = sweep\n", {"jobs": 4}).effective_jobs() == 4


def test_zeta0_writes_field_and_summary(tmp_path):
    field_out = tmp_path / "field.csv"
    json_out = tmp_path / "zeta0.json"
    args = ["zeta0", "--lambda", "3", "--n-rho", "48", "--n-xi", "48", "--rel-tol", "0.01"]
    result = runner.invoke(app, [*args, "--field-out", str(field_out), "--json-out", str(json_out)])
    assert result.exit_code == EXIT_OK, result.output
    summary = summary_of(result)
    assert float(summary["zeta0_lo"]) < float(summary["zeta0"]) <= float(summary["zeta0_hi"])
    payload = json.loads(json_out.read_text(encoding="utf-8"))
    assert payload["zeta0"] == pytest.approx(float(summary["zeta0"]), rel=1e-9)
    assert payload["field"]["n_rho"] == 48
    assert payload["bisections"] >= 1
    assert payload["trials"] > payload["bisections"]
    assert len(payload["newton_iterations"]) == payload["n_xi"]
    assert min(payload["newton_iterations"]) >= 1
    assert list(pd.read_csv(field_out).columns) == ["rho", "xi", "u"]

    result = runner.invoke(app, ["zeta0", "--lambda", "1", "--n-rho", "32", "--n-xi", "32"])
    assert result.exit_code == EXIT_OK
    assert summary_of(result)["status"] == "unbounded"


def test_sweep_output_is_deterministic(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        result = runner.invoke(
            app,
            ["sweep", "--lambdas", "2,3", "--n-rho", "48", "--n-xi", "48", "--rel-tol", "0.01"]
            + ["--out", str(path)],
        )
        assert result.exit_code == EXIT_OK, result.output
        assert summary_of(result)["decreasing"] == "True"
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_fit_and_collapse_on_curve_files(tmp_path):
    lam = np.geomspace(5.0, 80.0, 9)
    first = write_curve(tmp_path / "first.csv", lam, 1.77 * lam**-2.75)
    second = write_curve(tmp_path / "second.csv", lam, 3.54 * lam**-2.75)
    json_out = tmp_path / "fit.json"
    csv_out = tmp_path / "fit.csv"

    result = runner.invoke(
        app, ["fit", "--in", str(first), "--json-out", str(json_out), "--out", str(csv_out)]
    )
    assert result.exit_code == EXIT_OK, result.output
    summary = summary_of(result)
    assert float(summary["exponent"]) == pytest.approx(-2.75, abs=1e-9)
    assert float(summary["prefactor"]) == pytest.approx(1.77, rel=1e-9)
    payload = json.loads(json_out.read_text(encoding="utf-8"))
    assert payload["weighted"] is False
    assert len(payload["sensitivity"]) == 3
    table = pd.read_csv(csv_out)
    assert table["fit"].tolist() == ["selected", "lambda>=5", "lambda>=10", "lambda>=20"]
    np.testing.assert_allclose(table["exponent"], -2.75, atol=1e-9)
    assert table["n_points"].iloc[0] == int(summary["n_points"])

    result = runner.invoke(
        app, ["collapse", "--inputs", f"{first},{second}", "--from", "10", "--to", "40"]
    )
    assert result.exit_code == EXIT_OK, result.output
    assert float(summary_of(result)["spread"]) == pytest.approx(2.0 / 3.0, rel=1e-9)


def test_dimensional_length_from_given_zeta0(tmp_path):
    gas = tmp_path / "gas.cfg"
    gas.write_text(gas_text(), encoding="utf-8")
    result = runner.invoke(app, ["dimensional", "--gas", str(gas), "--zeta0", "0.005"])
    assert result.exit_code == EXIT_OK, result.output
    summary = summary_of(result)
    assert float(summary["re"]) == pytest.approx(1000.0, rel=1e-9)
    assert float(summary["z0"]) == pytest.approx(0.035, rel=1e-9)

    parsed = parse_gas(gas_text(pipe_radius=0.02))
    assert parsed.pipe_radius == 0.02
    with pytest.raises(ConfigError) as info:
        parse_gas(gas_text(pipe_radius=-1.0))
    assert info.value.key == "pipe_radius"


def test_summary_line_format():
    line = RunResult(0, {"command": "zeta0", "zeta0": math.inf, "x": 0.1, "ok": True}).summary_line()
    assert line == "command=zeta0 zeta0=inf x=0.1 ok=True"


def test_run_maps_missing_files_to_invalid(tmp_path):
    config = parse_config(f"command = fit\ninput = {tmp_path / 'none.csv'}\n")
    result = run(config)
    assert result.exit_code == EXIT_INVALID
    assert result.outputs == []


def test_malformed_curve_file_exits_with_invalid(tmp_path):
    garbled = tmp_path / "garbled.csv"
    garbled.write_text('lambda,zeta0\n"2,0.1\n', encoding="utf-8")
    result = runner.invoke(app, ["fit", "--in", str(garbled)])
    assert result.exit_code == EXIT_INVALID
    assert summary_of(result)["status"] == "invalid-input"

    text = tmp_path / "text.csv"
    text.write_text("lambda,zeta0,zeta0_lo,zeta0_hi,n_rho,n_xi\nten,0.1,0.09,0.1,64,64\n", encoding="utf-8")
    result = runner.invoke(app, ["collapse", "--inputs", f"{text},{text}"])
    assert result.exit_code == EXIT_INVALID
    assert summary_of(result)["status"] == "invalid-input"
