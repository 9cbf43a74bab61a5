import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from altphillips.errors import DomainError, ParameterError, StencilError
from altphillips.grid import (
    HalfGrid,
    NodeClass,
    ScalarField,
    gradient_at,
    gradients,
    hessian_at,
    hessians,
    interpolate,
    laplacian_at,
    laplacians,
    rescale_field,
    sup_on_halfball,
    sup_on_halfsphere,
)
from altphillips.oracle1d import profile_eval


def test_interval_classes():
    g = HalfGrid.interval(10)
    assert g.node_class[0] == NodeClass.FLAT
    assert g.node_class[-1] == NodeClass.CURVED
    assert np.all(g.node_class[1:-1] == NodeClass.INTERIOR)
    assert g.h == pytest.approx(0.1)


@pytest.mark.parametrize("make", [lambda: HalfGrid.half_disk(16), lambda: HalfGrid.half_disk(8, 3),
                                  lambda: HalfGrid.half_rectangle(8), lambda: HalfGrid.half_rectangle(4, 3)])
def test_grid_invariants(make):
    g = make()
    X = g.mesh()
    assert np.all(X[-1][g.mask(NodeClass.FLAT)] == 0)
    inter = g.interior_mask
    for idx in np.argwhere(inter):
        for a in range(g.dim):
            for s in (-1, 1):
                nb = idx.copy()
                nb[a] += s
                assert g.node_class[tuple(nb)] != NodeClass.EXTERIOR
    if g.shape == "half_disk":
        r = np.sqrt(sum(x * x for x in X))
        cur = g.mask(NodeClass.CURVED)
        # full-stencil classification: within sqrt(dim) h of the sphere
        assert np.all(g.radius - r[cur] <= np.sqrt(g.dim) * g.h + 1e-12)


def test_hessian_exact_on_quadratics():
    g = HalfGrid.interval(20)
    f = ScalarField.from_function(g, lambda x: x[:, 0] ** 2)
    assert hessian_at(f, (7,))[0, 0] == pytest.approx(2.0, abs=1e-10)
    g2 = HalfGrid.half_rectangle(8)
    f2 = ScalarField.from_function(g2, lambda x: x[:, 0] * x[:, 1])
    H = hessian_at(f2, (5, 3))
    assert H[0, 1] == pytest.approx(1.0, abs=1e-10)
    assert H[0, 0] == pytest.approx(0.0, abs=1e-10)
    assert H[1, 1] == pytest.approx(0.0, abs=1e-10)


def test_quartic_profile_derivatives():
    g = HalfGrid.interval(100)
    f = ScalarField.from_function(g, lambda x: x[:, 0] ** 4 / 64)
    assert hessian_at(f, (50,))[0, 0] == pytest.approx(0.046875, abs=1e-4)
    assert laplacian_at(f, (50,)) == pytest.approx(0.046875, abs=1e-4)


def test_gradient_and_laplacian_simple():
    g = HalfGrid.half_rectangle(8)
    c = ScalarField.from_function(g, lambda x: np.full(len(x), 3.0))
    assert np.allclose(gradient_at(c, (4, 4)), 0)
    assert laplacian_at(c, (4, 4)) == 0
    f = ScalarField.from_function(g, lambda x: x[:, -1])
    assert np.allclose(gradient_at(f, (8, 1)), [0.0, 1.0], atol=1e-10)


def test_stencil_error_on_boundary():
    g = HalfGrid.half_rectangle(8)
    f = ScalarField.zeros(g)
    with pytest.raises(StencilError):
        hessian_at(f, (0, 3))
    with pytest.raises(StencilError):
        gradient_at(f, (4, 0))


@given(st.integers(0, 2**31 - 1))
def test_hessian_trace_equals_laplacian(seed):
    rng = np.random.default_rng(seed)
    g = HalfGrid.half_disk(12)
    v = rng.standard_normal(g.extents)
    f = ScalarField(g, v)
    H = hessians(f)
    L = laplacians(f)
    assert np.allclose(np.trace(H, axis1=1, axis2=2), L, rtol=0, atol=1e-12 * np.abs(L).max())


@given(st.integers(0, 2**31 - 1))
def test_operators_exact_on_degree_two(seed):
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1, 1, 6)
    g = HalfGrid.half_rectangle(6)

    def q(x):
        return c[0] + c[1] * x[:, 0] + c[2] * x[:, 1] + c[3] * x[:, 0] ** 2 + c[4] * x[:, 0] * x[:, 1] + c[5] * x[:, 1] ** 2

    f = ScalarField.from_function(g, q)
    H = hessians(f)
    want = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])
    assert np.allclose(H, want, atol=1e-10)
    pts = g.points(g.interior_mask)
    G = gradients(f)
    assert np.allclose(G[:, 0], c[1] + 2 * c[3] * pts[:, 0] + c[4] * pts[:, 1], atol=1e-10)


def test_interpolation_and_coverage():
    g = HalfGrid.half_disk(16)
    f = ScalarField.from_function(g, lambda x: 2 * x[:, 0] + x[:, 1])
    pts = np.array([[0.1, 0.2], [-0.33, 0.05]])
    assert np.allclose(interpolate(f, pts), 2 * pts[:, 0] + pts[:, 1], atol=1e-12)
    with pytest.raises(DomainError):
        interpolate(f, [[0.99, 0.5]])
    with pytest.raises(DomainError):
        interpolate(f, [[0.0, -0.1]])


def test_rescale_fixed_point_and_identity(params):
    g = HalfGrid.half_disk(64)
    f = ScalarField.from_function(g, lambda x: profile_eval(params, x[:, -1]))
    t = HalfGrid.half_disk(16)
    r = rescale_field(f, [0.0, 0.0], 0.5, params, t)
    want = profile_eval(params, t.points()[:, -1])
    assert np.max(np.abs(r.values[t.domain_mask] - want)) <= 2 * (g.h / 0.5) ** 2 * params.amplitude * 12
    same = rescale_field(f, [0.0, 0.0], 1.0, params, g)
    assert np.allclose(same.values[g.domain_mask], f.values[g.domain_mask], atol=1e-15)


def test_rescale_composition(params):
    g = HalfGrid.half_rectangle(64)
    f = ScalarField.from_function(g, lambda x: np.sin(x[:, 0]) * x[:, 1] ** 2 + x[:, 1] ** 4)
    t = HalfGrid.half_rectangle(8)
    x0 = [0.1, 0.0]
    a = rescale_field(rescale_field(f, x0, 0.5, params, HalfGrid.half_rectangle(64)), [0, 0], 0.5, params, t)
    b = rescale_field(f, x0, 0.25, params, t)
    m = t.domain_mask
    scale = np.abs(b.values[m]).max()
    assert np.max(np.abs(a.values[m] - b.values[m])) <= 0.05 * scale


def test_rescale_coverage_error(params):
    g = HalfGrid.half_disk(16)
    f = ScalarField.zeros(g)
    with pytest.raises(DomainError):
        rescale_field(f, [0.5, 0.0], 0.8, params, HalfGrid.half_disk(8))


def test_sups(params):
    g = HalfGrid.half_rectangle(64)
    f = ScalarField.from_function(g, lambda x: profile_eval(params, x[:, -1]))
    assert sup_on_halfball(f, [0, 0], 0.5) == pytest.approx(1 / 1024, rel=1e-12)
    assert sup_on_halfsphere(f, [0, 0], 1.0) == pytest.approx(1 / 64, rel=1e-3)
    z = ScalarField.zeros(g)
    assert sup_on_halfball(z, [0, 0], 0.3) == 0
    assert sup_on_halfsphere(z, [0, 0], 0.3) == 0


def test_csv_roundtrip(tmp_path):
    for g in (HalfGrid.interval(8), HalfGrid.half_disk(8), HalfGrid.half_rectangle(4), HalfGrid.half_disk(4, 3)):
        f = ScalarField.from_function(g, lambda x: np.exp(x[:, -1]) + x[:, 0] / 3)
        p = tmp_path / "f.csv"
        f.to_csv(p)
        text = p.read_text().splitlines()
        assert text[0].startswith("# format_version")
        assert text[1] == ",".join([f"x{i + 1}" for i in range(g.dim)] + ["u"])
        back = ScalarField.from_csv(p)
        assert back.grid.shape == g.shape and back.grid.extents == g.extents
        m = g.domain_mask
        assert np.array_equal(back.values[m], f.values[m])


def test_bad_parameters():
    with pytest.raises(ParameterError):
        HalfGrid.interval(1)
    with pytest.raises(ParameterError):
        HalfGrid.half_disk(8, dim=4)
    with pytest.raises(ParameterError):
        ScalarField(HalfGrid.interval(4), np.zeros(3))
