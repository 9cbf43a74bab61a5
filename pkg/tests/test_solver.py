import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from altphillips.errors import ConvergenceError, ParameterError
from altphillips.grid import HalfGrid, NodeClass, ScalarField
from altphillips.operators import ApParams, Laplacian, LinearTrace, PerturbedTrace
from altphillips.oracle1d import profile_eval
from altphillips.solver import (
    SolveOptions,
    comparison_test,
    contact_floor,
    pde_residual,
    solve,
    solve_fully_nonlinear,
    solve_laplacian,
)


def end_data(value):
    return lambda p: np.where(p[:, 0] > 0, value, 0.0)


@pytest.fixture(scope="module")
def lap1d():
    p = ApParams(1.5)
    return solve_laplacian(HalfGrid.interval(1024), end_data(1 / 64), p)


def test_1d_profile_reproduction(lap1d):
    x = lap1d.field.grid.axes[0]
    assert np.max(np.abs(lap1d.field.values - x**4 / 64)) <= 1e-4


def test_result_invariants(lap1d):
    f = lap1d.field
    assert np.all(f.values >= 0)
    assert f.values[0] == 0
    assert f.values[-1] == 1 / 64
    assert lap1d.final_residual <= 1e-10
    assert lap1d.complementarity_gap <= 1e-10


def test_energy_nonincreasing(lap1d):
    e = np.asarray(lap1d.energy_history)
    assert np.all(np.diff(e) <= 1e-15 * np.abs(e).max())


def test_zero_data_gives_zero(params):
    for g in (HalfGrid.interval(64), HalfGrid.half_disk(32)):
        r = solve_laplacian(g, lambda p: np.zeros(len(p)), params)
        assert np.all(r.field.values[g.domain_mask] == 0)


def test_larger_data_dominates_profile(params):
    g = HalfGrid.interval(512)
    u = solve_laplacian(g, end_data(2 / 64), params).field
    assert np.all(u.values >= g.axes[0] ** 4 / 64 - 1e-12)


def test_negative_data_rejected(params):
    with pytest.raises(ParameterError):
        solve_laplacian(HalfGrid.interval(64), end_data(-1.0), params)


def test_nonzero_flat_data_rejected(params):
    with pytest.raises(ParameterError):
        solve_laplacian(HalfGrid.interval(64), lambda p: np.ones(len(p)), params)


def test_nonconvergence_carries_history(params):
    with pytest.raises(ConvergenceError) as exc:
        solve_laplacian(HalfGrid.interval(256), end_data(1.0), params,
                        SolveOptions(max_sweeps=1, continuation=False, gs_sweeps=1))
    assert len(exc.value.details["residual_history"]) >= 1


def test_options_validation():
    with pytest.raises(ParameterError):
        SolveOptions(damping=0)
    with pytest.raises(ParameterError):
        SolveOptions(tol_residual=0)
    with pytest.raises(ParameterError):
        SolveOptions(damping=1.5)


@given(st.floats(min_value=0.0, max_value=0.1))
@settings(max_examples=5, deadline=None)
def test_solution_range_1d(value):
    p = ApParams(1.5)
    u = solve_laplacian(HalfGrid.interval(64), end_data(value), p).field.values
    assert np.all(u >= 0)
    assert np.all(u <= value + 1e-15)
    assert np.all(np.diff(u) >= -1e-15)


def test_nonlinear_path_reproduces_laplacian(lap1d, params):
    r = solve_fully_nonlinear(lap1d.field.grid, end_data(1 / 64), Laplacian(), params)
    assert np.max(np.abs(r.field.values - lap1d.field.values)) <= 10 * 1e-10


def test_stability_in_theta(lap1d, params):
    dist = []
    for th in (0.2, 0.1, 0.05):
        r = solve(lap1d.field.grid, end_data(1 / 64), PerturbedTrace(th), params)
        dist.append(np.max(np.abs(r.field.values - lap1d.field.values)))
    assert dist[0] > dist[1] > dist[2] > 0


def test_linear_trace_symmetry_reduction(params):
    g = HalfGrid.half_rectangle(32)
    # lateral data: the discrete solution of the reduced problem 2 u'' = gamma u^(gamma-1)
    line = HalfGrid.interval(32)
    u1 = solve(line, end_data(1 / 64), LinearTrace(np.array([[2.0]])), params).field.values

    def data(p):
        return u1[np.rint(p[:, -1] / line.h).astype(int)]

    u = solve(g, data, LinearTrace(np.diag([1.0, 2.0])), params).field
    v = u.values
    dom = g.domain_mask
    assert dom.all()
    spread = np.max(v, axis=0) - np.min(v, axis=0)
    assert np.max(spread) <= 1e-8


def test_2d_perturbed_solution_has_small_residual(params):
    g = HalfGrid.half_disk(32)
    data = lambda p: profile_eval(params, p[:, -1])
    spec = PerturbedTrace(0.1)
    r = solve(g, data, spec, params)
    res = pde_residual(r.field, spec, params)
    assert np.max(res.values[g.interior_mask]) <= 1e-9
    assert r.kkt_residual <= 1e-10


def test_pde_residual_examples(params):
    g = HalfGrid.half_disk(16)
    z = pde_residual(ScalarField.zeros(g), Laplacian(), params)
    assert np.all(z.values[g.domain_mask] == 0)
    f = ScalarField.from_function(g, lambda x: x[:, -1])
    res = pde_residual(f, Laplacian(), params)
    m = g.interior_mask
    xn = g.mesh()[-1][m]
    assert np.allclose(res.values[m], 1.5 * np.sqrt(xn), atol=1e-12)


def test_pde_residual_profile_second_order(params):
    errs = []
    for n in (256, 512):
        g = HalfGrid.half_rectangle(n)
        f = ScalarField.from_function(g, lambda x: profile_eval(params, x[:, -1]))
        errs.append(np.max(pde_residual(f, Laplacian(), params).values))
    h = 1 / 256
    assert errs[0] <= 0.1 * h**2
    assert 3.2 <= errs[0] / errs[1] <= 4.8


def test_comparison_examples(params):
    g = HalfGrid.interval(256)
    rep = comparison_test(g, end_data(0.0), end_data(1 / 64), Laplacian(), params)
    assert rep["ordered"] and rep["max_violation"] <= 0
    rep = comparison_test(g, end_data(1 / 64), end_data(2 / 64), Laplacian(), params)
    assert rep["ordered"]
    with pytest.raises(ParameterError):
        comparison_test(g, end_data(2 / 64), end_data(1 / 64), Laplacian(), params)


def test_contact_floor_tracks_grid(params):
    a = contact_floor(HalfGrid.interval(64), params)
    b = contact_floor(HalfGrid.interval(128), params)
    assert a / b == pytest.approx(16.0)
