import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from altphillips.errors import ParameterError
from altphillips.grid import HalfGrid, ScalarField
from altphillips.operators import ApParams
from altphillips.oracle1d import Profile1D, first_integral, profile_eval, shoot
from altphillips.solver import SolveOptions, solve_laplacian


def test_profile_examples(params):
    assert profile_eval(params, 1.0) == pytest.approx(1 / 64, abs=1e-16)
    assert profile_eval(params, -1.0) == 0.0
    assert profile_eval(params, 0.5) == pytest.approx(1 / 1024, abs=1e-17)


@given(st.floats(min_value=1.05, max_value=1.95))
def test_profile_ode_identity_exact_derivatives(gamma):
    p = ApParams(gamma)
    prof = Profile1D(p)
    x = np.linspace(1e-3, 2.0, 1000)
    lhs = prof.derivative(x, 2)
    rhs = gamma * prof(x) ** (gamma - 1)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=0)
    # zero-energy branch of the first integral
    E = 0.5 * prof.derivative(x) ** 2 - prof(x) ** gamma
    assert np.allclose(E, 0, atol=1e-12 * np.max(prof(x) ** gamma))


@pytest.mark.parametrize("n", [128, 256])
def test_first_integral_of_profile_is_second_order(params, n):
    g = HalfGrid.interval(n)
    f = ScalarField.from_function(g, lambda x: profile_eval(params, x[:, 0]))
    _, E = first_integral(f, params)
    assert np.max(np.abs(E)) <= 0.05 * g.h**2


def test_first_integral_refinement(params):
    errs = []
    for n in (128, 256, 512):
        g = HalfGrid.interval(n)
        _, E = first_integral(ScalarField.from_function(g, lambda x: profile_eval(params, x[:, 0])), params)
        errs.append(np.max(np.abs(E)))
    assert 3.2 <= errs[0] / errs[1] <= 4.8
    assert 3.2 <= errs[1] / errs[2] <= 4.8


def test_first_integral_constant(params):
    g = HalfGrid.interval(64)
    f = ScalarField(g, np.full(g.extents, 0.25))
    _, E = first_integral(f, params)
    assert np.allclose(E, -(0.25**1.5))


def test_first_integral_shifted_profile(params):
    g = HalfGrid.interval(256)
    f = ScalarField.from_function(g, lambda x: profile_eval(params, x[:, 0] - 0.25))
    x, E = first_integral(f, params)
    assert np.max(np.abs(E[x > 0.25 + g.h])) <= 0.05 * g.h**2


def test_first_integral_rejects_2d(params):
    with pytest.raises(ParameterError):
        first_integral(ScalarField.zeros(HalfGrid.half_disk(8)), params)


def test_shoot_examples(params):
    f = shoot(params, 1.0, 1 / 64, tol=1e-12)
    x = f.grid.axes[0]
    assert np.max(np.abs(f.values - x**4 / 64)) <= 1e-12
    z = shoot(params, 1.0, 0.0)
    assert np.all(z.values == 0)
    with pytest.raises(ParameterError):
        shoot(params, 1.0, -1.0)


def test_shoot_below_profile_has_contact(params):
    f, e0 = shoot(params, 1.0, 1 / 1024, return_energy=True)
    x = f.grid.axes[0]
    assert e0 == 0.0
    assert np.all(f.values[x <= 0.5 - 1e-12] == 0)
    assert f.values[-1] == pytest.approx(1 / 1024, rel=1e-12)


def test_shoot_above_profile_energy_constant(params):
    f, e0 = shoot(params, 1.0, 1.0, tol=1e-12, return_energy=True)
    assert e0 > 0
    assert f.values[-1] == pytest.approx(1.0, abs=1e-11)
    _, E = first_integral(f, params)
    assert np.max(np.abs(E - e0)) <= 1e-5 * e0


def test_shoot_agrees_with_laplacian_solver(params):
    n = 1024
    g = HalfGrid.interval(n)
    opts = SolveOptions(tol_residual=1e-10)
    u = solve_laplacian(g, lambda p: np.where(p[:, 0] > 0, 1.0, 0.0), params, opts).field
    ref = shoot(params, 1.0, 1.0, tol=1e-13, steps=4 * n)
    gap = np.max(np.abs(u.values - ref.values[::4]))
    assert gap <= 10 * max(opts.tol_residual, g.h**2)
