import pytest
from pydantic import ValidationError

from thermx_core.config import (
    DEFAULTS_PATH,
    ContinuationSettings,
    EnvSettings,
    SolverSettings,
    default_settings,
    load_settings,
)


def test_packaged_defaults():
    loaded = load_settings()
    assert loaded.source == DEFAULTS_PATH
    data = loaded.data
    assert data.newton.tol == 1.0e-10
    assert data.newton.max_iter == 50
    assert data.newton.max_halvings == 8
    assert data.newton.u_blow == 30.0
    assert data.continuation.zeta_start == 1.0e-4
    assert data.continuation.zeta_cap == 1.0e3
    assert data.steady.rho_start == 1.0e-8
    assert data.steady.wall_delta == 1.0e-6
    assert data.physics.prandtl == 0.7
    assert default_settings() is default_settings()


def test_missing_settings_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_settings(tmp_path / "absent.yml")


def test_partial_settings_file_keeps_defaults(tmp_path):
    path = tmp_path / "solver.yml"
    path.write_text("grid:\n  n_rho: 64\n", encoding="utf-8")
    data = load_settings(path).data
    assert data.grid.n_rho == 64
    assert data.grid.n_xi == SolverSettings().grid.n_xi


def test_invalid_settings_rejected(tmp_path):
    path = tmp_path / "solver.yml"
    path.write_text("grid:\n  n_rho: 8\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_settings(path)
    with pytest.raises(ValidationError):
        ContinuationSettings(zeta_start=1.0e-12, zeta_floor=1.0e-9)


def test_jobs_from_environment(monkeypatch):
    monkeypatch.delenv("THERMX_JOBS", raising=False)
    assert EnvSettings().jobs == 1
    monkeypatch.setenv("THERMX_JOBS", "4")
    assert EnvSettings().jobs == 4
