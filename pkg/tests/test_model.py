import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.integrate import quad

from thermx_core.errors import InvalidInputError
from thermx_core.model import (
    GasSpec,
    Laminar,
    PipeProblem,
    Turbulent,
    advection_coefficient,
    alpha_of_re,
    axial_coefficient,
    c_of_alpha,
    diffusion_weight,
    dimensional_critical_length,
    friction_reynolds,
    lambda_from_gas,
    reynolds_from_friction,
    velocity_profile,
)

NU = 1.4e-5
KAPPA = 2.0e-5


def make_gas(**overrides):
    t0 = 500.0
    phi = 20.0
    values = {
        "heat_capacity": 1000.0,
        "molecular_diffusivity": KAPPA,
        "kinematic_viscosity": NU,
        "heat_of_reaction": 1.0,
        # makes e^phi kappa T0 c / (Q phi sigma) = 1 m^2
        "preexponential": math.exp(phi) * KAPPA * t0 * 1000.0 / phi,
        "activation_energy": phi * 8.314462618 * t0,
        "wall_temperature": t0,
        "pipe_radius": 2.0,
        "discharge": 1.0e-3,
    }
    values.update(overrides)
    return GasSpec(**values)


def discharge_for(re, radius, nu=NU):
    return re * math.pi * radius * nu / 2.0


def test_alpha_of_re_values():
    assert alpha_of_re(math.exp(1.5)) == pytest.approx(1.0, rel=1e-14)
    assert alpha_of_re(1.0e4) == pytest.approx(0.162861, abs=1e-6)
    with pytest.raises(InvalidInputError):
        alpha_of_re(1.0)
    with pytest.raises(InvalidInputError):
        alpha_of_re(0.5)


def test_alpha_and_c_are_decreasing():
    res = np.geomspace(5.0, 1.0e9, 50)
    alphas = [alpha_of_re(re) for re in res]
    assert all(b < a for a, b in zip(alphas, alphas[1:]))
    cs = [c_of_alpha(a) for a in np.linspace(0.01, 1.5, 50)]
    assert all(b < a for a, b in zip(cs, cs[1:]))


def test_c_of_alpha_values():
    assert c_of_alpha(1.0) == pytest.approx(3.366025, abs=1e-6)
    assert c_of_alpha(0.162861) == pytest.approx(7.81759, rel=1e-5)
    with pytest.raises(InvalidInputError):
        c_of_alpha(0.0)


def test_turbulent_consistency_checks():
    regime = Turbulent.from_re(1.0e6)
    assert regime.alpha == pytest.approx(0.108574, abs=1e-6)
    assert regime.kind == "turbulent"
    with pytest.raises(InvalidInputError):
        Turbulent(re=1.0e6, alpha=0.2, c=regime.c)
    with pytest.raises(InvalidInputError):
        Turbulent.from_re(2.0)  # alpha > 1.5


def test_advection_coefficient():
    laminar = Laminar()
    assert advection_coefficient(laminar, 0.0) == 2.0
    assert advection_coefficient(laminar, 1.0) == 0.0
    mean, _ = quad(lambda r: advection_coefficient(laminar, r) * 2.0 * r, 0.0, 1.0)
    assert mean == pytest.approx(1.0, rel=1e-12)
    half = Turbulent.from_re(math.exp(3.0))
    assert advection_coefficient(half, 0.75) == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(InvalidInputError):
        advection_coefficient(laminar, 1.5)


def test_axial_coefficient_is_half_the_laminar_velocity():
    rho = np.linspace(0.0, 1.0, 11)
    np.testing.assert_allclose(axial_coefficient(Laminar(), rho), 0.5 * advection_coefficient(Laminar(), rho))
    regime = Turbulent.from_re(1.0e5)
    np.testing.assert_allclose(axial_coefficient(regime, rho), advection_coefficient(regime, rho))


def test_diffusion_weight():
    assert diffusion_weight(Laminar(), 0.3) == pytest.approx(0.3)
    regime = Turbulent.from_re(math.exp(7.5))
    assert regime.alpha == pytest.approx(0.2)
    assert diffusion_weight(regime, 0.0) == 0.0
    assert diffusion_weight(regime, 1.0) == 0.0
    assert diffusion_weight(regime, 0.5) == pytest.approx(0.143587, abs=1e-6)
    array = diffusion_weight(regime, np.array([0.1, 0.2]))
    assert isinstance(array, np.ndarray)


def test_turbulent_weight_log_slopes():
    regime = Turbulent.from_re(1.0e5)
    small = np.array([1.0e-6, 1.0e-3])
    axis = np.asarray(diffusion_weight(regime, small))
    assert np.diff(np.log(axis))[0] / np.diff(np.log(small))[0] == pytest.approx(2.0, abs=1e-3)
    wall = np.asarray(diffusion_weight(regime, 1.0 - small))
    slope = np.diff(np.log(wall))[0] / np.diff(np.log(small))[0]
    assert slope == pytest.approx(1.0 - regime.alpha, abs=1e-3)


def test_velocity_profiles_have_unit_mean():
    for regime in (Laminar(), Turbulent.from_re(1.0e4), Turbulent.from_re(1.0e7)):
        mean, _ = quad(lambda r: velocity_profile(regime, r) * 2.0 * r, 0.0, 1.0, limit=200)
        assert mean == pytest.approx(1.0, rel=1e-8)


def test_friction_reynolds_round_trip_and_quadrature():
    for re in (1.0e3, 1.0e4, 1.0e6, 1.0e9):
        w = friction_reynolds(re)
        alpha = alpha_of_re(re)
        assert reynolds_from_friction(w, alpha) == pytest.approx(re, rel=1e-10)

    re = 1.0e4
    w = friction_reynolds(re)
    alpha = alpha_of_re(re)
    c = c_of_alpha(alpha)
    # mean of v*C (v* y / nu)^alpha over the section, with y = r0 (1 - rho) and W = 2 v* r0 / nu
    integral, _ = quad(lambda r: (1.0 - r) ** alpha * r, 0.0, 1.0)
    quadrature_re = w * 2.0 * c * (w / 2.0) ** alpha * integral
    assert quadrature_re == pytest.approx(re, rel=1e-3)
    assert friction_reynolds(1.0e5) > friction_reynolds(1.0e4)


def test_gas_validation():
    with pytest.raises(ValidationError):
        make_gas(activation_energy=0.5 * 8.314462618 * 500.0)
    with pytest.raises(ValidationError):
        make_gas(pipe_radius=-1.0)
    with pytest.raises(ValidationError):
        make_gas(unknown_field=1.0)


def test_small_phi_is_logged(caplog):
    with caplog.at_level("WARNING", logger="thermx_core.model"):
        make_gas(activation_energy=5.0 * 8.314462618 * 500.0)
    assert any("high-activation-energy" in r.getMessage() for r in caplog.records)


def test_lambda_from_gas_laminar():
    scale = lambda_from_gas(make_gas())
    assert scale.ell == pytest.approx(1.0, rel=1e-12)
    assert scale.lambda_ == pytest.approx(2.0, rel=1e-12)
    doubled = lambda_from_gas(make_gas(pipe_radius=4.0))
    assert doubled.lambda_ == pytest.approx(2.0 * scale.lambda_, rel=1e-12)


def test_lambda_from_gas_turbulent_factor_at_unit_alpha():
    radius = 2.0
    gas = make_gas(
        kinematic_viscosity=KAPPA,
        prandtl=1.0,
        discharge=discharge_for(math.exp(1.5), radius, nu=KAPPA),
    )
    laminar = lambda_from_gas(gas, "laminar")
    turbulent = lambda_from_gas(gas, "turbulent")
    assert isinstance(turbulent.regime, Turbulent)
    assert turbulent.regime.alpha == pytest.approx(1.0, rel=1e-9)
    ratio = (turbulent.ell / laminar.ell) ** 2
    assert ratio == pytest.approx(1.0 / 3.366025, rel=1e-6)


def test_dimensional_critical_length():
    gas = make_gas(pipe_radius=0.01, discharge=discharge_for(1000.0, 0.01))
    assert gas.reynolds == pytest.approx(1000.0, rel=1e-12)
    assert dimensional_critical_length(gas, Laminar(), 0.005) == pytest.approx(0.035, rel=1e-9)
    assert dimensional_critical_length(gas, Laminar(), 0.0) == 0.0
    assert dimensional_critical_length(gas, Laminar(), 0.01) == pytest.approx(0.07, rel=1e-9)

    unit = make_gas(pipe_radius=1.0)
    regime = Turbulent.from_re(math.exp(1.5))
    z0 = dimensional_critical_length(unit, regime, 1.0e-3, friction_re=100.0)
    assert z0 == pytest.approx(56.65, rel=1e-4)
    with pytest.raises(InvalidInputError):
        dimensional_critical_length(unit, Laminar(), -1.0)


def test_pipe_problem_validation():
    assert PipeProblem(0.0).regime == Laminar()
    with pytest.raises(InvalidInputError):
        PipeProblem(-1.0)
    with pytest.raises(InvalidInputError):
        PipeProblem(1.0, inlet=lambda r: 1.0 + 0.0 * r)
    problem = PipeProblem(1.0, inlet=lambda r: 0.1 * (1.0 - r**2))
    assert problem.inlet_profile(np.array([0.0]))[0] == pytest.approx(0.1)
    assert problem.with_lambda(2.0).lambda_ == 2.0
