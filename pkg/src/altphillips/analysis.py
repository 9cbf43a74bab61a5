"""Diagnostics for discrete solutions.

All functions are pure.  Radii and base points are in the physical
coordinates of the field's grid; rescalings use ``u(x0 + r x) / r**beta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import RectBivariateSpline, RegularGridInterpolator, make_interp_spline
from scipy.ndimage import distance_transform_edt

from .errors import ContractError, DegenerateDataError, DomainError, ParameterError
from .grid import (
    HalfGrid,
    NodeClass,
    ScalarField,
    _shifted,
    _stencil_offsets,
    gradients,
    halfsphere_samples,
    hessians,
    interpolate,
    laplacians,
    rescale_field,
    sup_on_halfball,
    sup_on_halfsphere,
)
from .operators import ApParams, Operator
from .oracle1d import profile_eval
from .solver import contact_floor

# polar quadrature for the Weiss energy: directions and Gauss-Legendre radial nodes
WEISS_DIRECTIONS = {2: 512, 3: 3072}
WEISS_RADIAL_NODES = 48
SPLINE_MARGIN = 4


@dataclass
class FreeBoundarySet:
    """Interpolated crossing points of the contact floor, all with ``x_n > h/2``."""

    points: np.ndarray
    h: float
    floor: float

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.points.size and np.any(self.points[:, -1] <= 0):
            raise ContractError("free-boundary points must satisfy x_n > 0")

    def __len__(self):
        return int(self.points.shape[0])

    def nearest(self, x0) -> np.ndarray:
        if len(self) == 0:
            raise DegenerateDataError("free boundary is empty")
        d = np.linalg.norm(self.points - np.asarray(x0, dtype=float), axis=1)
        return self.points[int(np.argmin(d))]


@dataclass
class WeissProfile:
    radii: np.ndarray
    values: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.radii) <= 0):
            raise ParameterError("Weiss radii must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("Weiss values must be finite")

    def nondecreasing(self, tol: float) -> bool:
        return bool(np.all(np.diff(self.values) >= -tol))


# Weiss functional ---------------------------------------------------------
def _smooth_reconstruction(field: ScalarField, x0, r):
    """Cubic-spline reconstruction of ``u`` on a box around ``B_r(x0)``.

    Returns ``f(points) -> (u, grad u)``.  Nodes within ``r`` plus the spline
    margin of ``x0`` must be domain nodes; box corners outside the domain are
    filled with the nearest domain value.
    """
    g = field.grid
    d, h = g.dim, g.h
    lo = np.floor((x0 - r - g.origin) / h).astype(int) - SPLINE_MARGIN
    hi = np.ceil((x0 + r - g.origin) / h).astype(int) + SPLINE_MARGIN
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, np.array(g.extents) - 1)
    box = tuple(slice(a, b + 1) for a, b in zip(lo, hi))
    sub = field.values[box]
    axes = [ax[sl] for ax, sl in zip(g.axes, box)]
    hole = np.isnan(sub)
    if hole.any():
        X = np.meshgrid(*axes, indexing="ij")
        dist = np.sqrt(sum((x - c) ** 2 for x, c in zip(X, x0)))
        if np.any(hole & (dist <= r + SPLINE_MARGIN * h)):
            raise DomainError(f"ball B_{r}({np.asarray(x0).tolist()}) is not covered by domain nodes")
        idx = distance_transform_edt(hole, return_distances=False, return_indices=True)
        sub = sub[tuple(idx)]
    if d == 1:
        spl = make_interp_spline(axes[0], sub, k=3)
        dspl = spl.derivative()
        return lambda P: (spl(P[:, 0]), dspl(P[:, 0])[:, None])
    if d == 2:
        spl = RectBivariateSpline(axes[0], axes[1], sub, kx=3, ky=3, s=0)

        def f2(P):
            x, y = P[:, 0], P[:, 1]
            return spl.ev(x, y), np.stack([spl.ev(x, y, dx=1), spl.ev(x, y, dy=1)], axis=1)

        return f2
    itp = RegularGridInterpolator(axes, sub, method="cubic", bounds_error=False, fill_value=None)
    eps = 1e-3 * h

    def f3(P):
        u = itp(P)
        grad = np.zeros_like(P)
        for a in range(3):
            e = np.zeros(3)
            e[a] = eps
            grad[:, a] = (itp(P + e) - itp(P - e)) / (2 * eps)
        return u, grad

    return f3


def _directions(d):
    if d == 1:
        return np.array([[-1.0], [1.0]]), np.array([1.0, 1.0])
    n = WEISS_DIRECTIONS[d]
    k = np.arange(n) + 0.5
    if d == 2:
        th = 2 * np.pi * k / n
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(n, 2 * np.pi / n)
    z = 1 - 2 * k / n
    phi = np.pi * (3 - np.sqrt(5)) * np.arange(n)
    s = np.sqrt(1 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1), np.full(n, 4 * np.pi / n)


def _energy_integral(recon, x0, r, params, d):
    """``int_{B_r(x0)^+} |grad u|^2/2 + (u^+)^gamma`` in polar coordinates."""
    om, wd = _directions(d)
    neg = om[:, -1] < 0
    rmax = np.full(om.shape[0], float(r))
    rmax[neg] = np.minimum(r, x0[-1] / -om[neg, -1])
    t, w = np.polynomial.legendre.leggauss(WEISS_RADIAL_NODES)
    t, w = 0.5 * (t + 1), 0.5 * w
    rho = rmax[:, None] * t[None]
    wts = wd[:, None] * rmax[:, None] * w[None] * rho ** (d - 1)
    P = (x0 + rho[..., None] * om[:, None, :]).reshape(-1, d)
    keep = wts.ravel() > 0
    u, grad = recon(P[keep])
    f = 0.5 * np.sum(grad**2, axis=1) + np.maximum(u, 0.0) ** params.gamma
    return float(np.sum(f * wts.ravel()[keep]))


def _surface_integral(recon, x0, r, d):
    pts = halfsphere_samples(x0, r, d)
    if pts.shape[0] == 0:
        return 0.0
    u, _ = recon(pts)
    if d == 1:
        return float(np.sum(u**2))
    c = max(-1.0, -float(x0[-1]) / r)
    if d == 2:
        measure = r * (np.pi - 2 * np.arcsin(c))
    else:
        measure = 2 * np.pi * r * r * (1 - c)
    return float(np.mean(u**2) * measure)


def weiss(field: ScalarField, x0, r: float, params: ApParams) -> float:
    """``W(u_{x0,r}, 1)`` evaluated from physical-space integrals.

    The field is reconstructed by cubic splines on a box around the ball; the
    volume term uses polar Gauss-Legendre quadrature and the boundary term
    ``64 dim`` equally spaced samples of the admissible half-sphere.

    ``W = r^(2-2 beta-d) [ int_{B_r^+} (|grad u|^2/2 + u^gamma)
    - beta/(2r) int_{dB_r^+} u^2 ]``.
    """
    if not r > 0:
        raise ParameterError("r must be > 0")
    d = field.grid.dim
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    b = params.beta
    recon = _smooth_reconstruction(field, x0, r)
    vol = _energy_integral(recon, x0, r, params, d)
    surf = _surface_integral(recon, x0, r, d)
    return float(r ** (2 - 2 * b - d) * (vol - 0.5 * b / r * surf))


def weiss_profile(field, x0, radii: Sequence[float], params) -> WeissProfile:
    radii = list(radii)
    return WeissProfile(radii, [weiss(field, x0, r, params) for r in radii], np.asarray(x0, dtype=float))


# free boundary --------------------------------------------------------------
def extract_free_boundary(field: ScalarField, params: ApParams, floor: Optional[float] = None) -> FreeBoundarySet:
    """Crossings of the contact floor along grid edges.

    One endpoint is an interior node with ``u <= floor``; the other is a domain
    node with ``u > floor``.  The crossing is placed by linear interpolation and
    kept when ``x_n > h/2``.
    """
    g = field.grid
    if floor is None:
        floor = contact_floor(g, params)
    u = field.values
    contact = g.interior_mask & (u <= floor)
    positive = g.domain_mask & (u > floor)
    X = g.mesh()
    pts = []
    for off in _stencil_offsets(g.dim, diagonal=False):
        nb_pos = _shifted(positive, off, False)
        sel = contact & nb_pos
        if not sel.any():
            continue
        ua = u[sel]
        ub = _shifted(u, off, np.nan)[sel]
        t = (floor - ua) / (ub - ua)
        base = np.stack([x[sel] for x in X], axis=1)
        pts.append(base + t[:, None] * g.h * np.array(off))
    P = np.concatenate(pts) if pts else np.zeros((0, g.dim))
    P = P[P[:, -1] > g.h / 2]
    if P.size:
        P = np.unique(np.round(P, 15), axis=0)
    return FreeBoundarySet(P, g.h, floor)


def contact_modulus(fb: FreeBoundarySet, radii: Sequence[float], x0=None) -> dict:
    """``r -> max x_n / |x - x0|`` over points with ``|x - x0| <= r`` (``None`` if no point)."""
    out = {}
    P = fb.points
    if x0 is None:
        x0 = np.zeros(P.shape[1] if P.size else 1)
    x0 = np.asarray(x0, dtype=float)
    for r in radii:
        if len(fb) == 0:
            out[float(r)] = None
            continue
        dist = np.linalg.norm(P - x0, axis=1)
        sel = (dist <= r) & (dist > 0)
        out[float(r)] = float(np.max((P[sel, -1] - x0[-1]) / dist[sel])) if sel.any() else None
    return out


# growth and nondegeneracy ---------------------------------------------------
def _value_at(field, x0):
    return float(interpolate(field, np.asarray(x0, dtype=float).reshape(1, -1))[0])


def growth_exponent(field: ScalarField, x0, radii: Sequence[float], params: ApParams) -> dict:
    """Least-squares slope of ``log sup_{B_r^+(x0)} u`` against ``log r``."""
    radii = np.asarray(list(radii), dtype=float)
    if radii.size < 3:
        raise ParameterError("growth_exponent needs at least 3 radii")
    floor = contact_floor(field.grid, params)
    u0 = _value_at(field, x0)
    if u0 > floor * (1 + 1e-9):
        raise ContractError(f"base point has u = {u0:.3e} above the contact floor {floor:.3e}")
    sups = np.array([sup_on_halfball(field, x0, r) for r in radii])
    if np.any(sups <= 0):
        raise DegenerateDataError("no positive values near the base point", sups=sups.tolist())
    A = np.column_stack([np.log(radii), np.ones_like(radii)])
    (slope, intercept), *_ = np.linalg.lstsq(A, np.log(sups), rcond=None)
    return {"slope": float(slope), "intercept": float(intercept), "per_radius_sups": sups.tolist(),
            "radii": radii.tolist()}


def nondegeneracy_check(field: ScalarField, x0, radii, a: float, params: ApParams) -> dict:
    """Check ``sup_{dB_r^+(x0)} u >= a r^beta`` per radius."""
    g = field.grid
    floor = contact_floor(g, params)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    pts = g.points()
    near = np.linalg.norm(pts - x0, axis=1) <= np.sqrt(g.dim) * g.h * (1 + 1e-9)
    in_closure = bool(np.any(field.values[g.domain_mask][near] > floor))
    margins = [sup_on_halfsphere(field, x0, r) - a * r ** params.beta for r in radii]
    return {
        "holds": bool(in_closure and all(m >= 0 for m in margins)),
        "precondition_ok": in_closure,
        "margin_per_radius": [float(m) for m in margins],
        "radii": [float(r) for r in radii],
        "a": float(a),
    }


def barrier_supersolution_check(spec: Operator, params: ApParams, a: float, sample_points=None,
                                dim: int = 2, n_samples: int = 1000, seed: int = 0) -> dict:
    """Evaluate ``F(D^2 Phi) - gamma Phi^(gamma-1)`` for ``Phi = a |x|^beta`` exactly.

    ``D^2 Phi = a beta |x|^(beta-2) (I + (beta-2) xhat xhat^T)``.  Default
    samples are seeded uniform points of the unit half-ball.
    """
    if not a > 0:
        raise ParameterError("a must be > 0")
    if sample_points is None:
        rng = np.random.default_rng(seed)
        P = rng.uniform(-1, 1, size=(4 * n_samples, dim))
        P[:, -1] = np.abs(P[:, -1])
        P = P[(np.linalg.norm(P, axis=1) <= 1) & (np.linalg.norm(P, axis=1) > 1e-3)][:n_samples]
    else:
        P = np.atleast_2d(np.asarray(sample_points, dtype=float))
    b, gm = params.beta, params.gamma
    rad = np.linalg.norm(P, axis=1)
    xh = P / rad[:, None]
    d = P.shape[1]
    H = a * b * rad[:, None, None] ** (b - 2) * (np.eye(d)[None] + (b - 2) * xh[:, :, None] * xh[:, None, :])
    phi = a * rad**b
    margin = spec.value(H) - gm * phi ** (gm - 1)
    scale = gm * phi ** (gm - 1)
    worst = int(np.argmax(margin / scale))
    return {
        "is_supersolution": bool(np.all(margin <= 1e-12 * scale)),
        "worst_margin": float(margin[worst]),
        "worst_relative_margin": float(margin[worst] / scale[worst]),
        "worst_point": P[worst].tolist(),
        "a": float(a),
    }


# w-transform ----------------------------------------------------------------
def transform_w(field: ScalarField, params: ApParams) -> dict:
    """``w = u^(2/beta)`` and ``sup |Delta_h w - A + B |grad_h w|^2 / w|`` on ``{w > 0.05 max w}``.

    ``A = gamma (2 - gamma)``, ``B = (gamma - 1)/(2 - gamma)``.
    """
    if np.any(field.values[field.grid.domain_mask] < 0):
        raise ContractError("transform_w requires u >= 0")
    g = field.grid
    gm = params.gamma
    A = gm * (2 - gm)
    B = (gm - 1) / (2 - gm)
    w = ScalarField(g, np.power(np.nan_to_num(field.values), 2.0 / params.beta))
    m = g.interior_mask
    wv = w.values[m]
    wmax = float(np.max(w.values[g.domain_mask])) if g.domain_mask.any() else 0.0
    sel = wv > 0.05 * wmax
    if wmax <= 0 or not sel.any():
        return {"w": w, "residual_sup": 0.0}
    lap = laplacians(w, m)[sel]
    grad = gradients(w, m)[sel]
    res = np.abs(lap - A + B * np.sum(grad**2, axis=1) / wv[sel])
    return {"w": w, "residual_sup": float(np.max(res))}


# directional monotonicity -----------------------------------------------
def _region_mask(grid: HalfGrid, region):
    m = grid.interior_mask
    if region is None:
        return m
    if isinstance(region, np.ndarray) and region.dtype == bool:
        return m & region
    center, radius = region
    pts = grid.mesh()
    dist2 = sum((x - c) ** 2 for x, c in zip(pts, np.asarray(center, dtype=float)))
    return m & (dist2 <= radius * radius)


def directional_monotonicity(field: ScalarField, directions, region=None, tol_slope=None) -> list:
    """Minimum of ``e . grad_h u`` over interior nodes of ``region``.

    ``region`` is ``None`` (all interior nodes), a boolean mask or a pair
    ``(center, radius)``.  The default ``tol_slope`` is ``10 h`` times the
    largest central second difference in the region.
    """
    g = field.grid
    m = _region_mask(g, region)
    grad = gradients(field, m)
    if tol_slope is None:
        H = hessians(field, m)
        c2 = float(np.max(np.abs(H))) if H.size else 0.0
        tol_slope = 10.0 * g.h * c2
    out = []
    for e in directions:
        e = np.asarray(e, dtype=float).reshape(-1)
        if e.size != g.dim:
            raise ParameterError("direction has the wrong dimension")
        if e[-1] < 0:
            raise ParameterError("directions must lie in the closed upper hemisphere")
        e = e / np.linalg.norm(e)
        dd = grad @ e
        mn = float(np.min(dd)) if dd.size else 0.0
        out.append({"direction": e.tolist(), "min_derivative": mn, "monotone": bool(mn >= -tol_slope),
                    "tol_slope": float(tol_slope)})
    return out


# blow-up --------------------------------------------------------------------
def unit_target(dim: int, n: int = 64) -> HalfGrid:
    return HalfGrid.interval(n) if dim == 1 else HalfGrid.half_disk(n, dim)


def blowup_distance(field: ScalarField, x0, radii, params: ApParams, target: Optional[HalfGrid] = None) -> dict:
    """``sup |u_{x0,r} - profile(x_n)|`` on the unit half-ball target per radius."""
    g = field.grid
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0[-1] != 0:
        raise ParameterError("blow-up base point must lie on the flat boundary")
    floor = contact_floor(g, params)
    if _value_at(field, x0) > floor:
        raise ContractError("blow-up base point must satisfy u <= floor")
    target = target or unit_target(g.dim)
    prof = profile_eval(params, target.points()[:, -1])
    dist = []
    for r in radii:
        ur = rescale_field(field, x0, r, params, target)
        dist.append(float(np.max(np.abs(ur.values[target.domain_mask] - prof))))
    return {
        "radii": [float(r) for r in radii],
        "sup_distance_to_profile": dist,
        "relative": [x / params.amplitude for x in dist],
    }


def gradient_at_contact(field: ScalarField, x0) -> float:
    """``|grad_h u|`` at the flat-boundary node nearest ``x0``.

    Tangential components use central differences along the flat boundary
    (one-sided at its ends); the normal one uses ``(-3u_0 + 4u_1 - u_2)/(2h)``.
    """
    g = field.grid
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if abs(x0[-1]) > 1e-12:
        raise ParameterError("x0 must lie on the flat boundary")
    idx = np.rint((x0 - g.origin) / g.h).astype(int)
    if g.node_class[tuple(idx)] != NodeClass.FLAT:
        raise DomainError(f"no flat-boundary node at {x0.tolist()}")
    u = field.values
    h = g.h
    comp = []
    for a in range(g.dim - 1):
        e = np.zeros(g.dim, int)
        e[a] = 1
        up, dn = tuple(idx + e), tuple(idx - e)
        ok_up = idx[a] + 1 < g.extents[a] and not np.isnan(u[up])
        ok_dn = idx[a] - 1 >= 0 and not np.isnan(u[dn])
        if ok_up and ok_dn:
            comp.append((u[up] - u[dn]) / (2 * h))
        elif ok_up:
            comp.append((u[up] - u[tuple(idx)]) / h)
        elif ok_dn:
            comp.append((u[tuple(idx)] - u[dn]) / h)
        else:
            comp.append(0.0)
    en = np.zeros(g.dim, int)
    en[-1] = 1
    u0, u1, u2 = u[tuple(idx)], u[tuple(idx + en)], u[tuple(idx + 2 * en)]
    comp.append((-3 * u0 + 4 * u1 - u2) / (2 * h))
    return float(np.linalg.norm(comp))
