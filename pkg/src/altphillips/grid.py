"""Uniform Cartesian grids on half-domains and fields living on them.

The last coordinate is always the normal direction ``x_n >= 0``; the flat
boundary is ``{x_n = 0}``.  Half-disks are masked Cartesian grids: a node is
``INTERIOR`` when it lies in ``{x_n > 0}`` and its full ``3**dim`` stencil
(axis and diagonal neighbours) is inside the closed disk.  Remaining in-domain
nodes off the flat boundary carry ``CURVED`` and receive Dirichlet data.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import DomainError, ParameterError, StencilError

FORMAT_VERSION = 1


class NodeClass(IntEnum):
    INTERIOR = 0
    FLAT = 1
    CURVED = 2
    EXTERIOR = 3


SHAPES = ("interval", "half_rectangle", "half_disk")


def _stencil_offsets(dim, diagonal=True):
    if diagonal:
        return [o for o in itertools.product((-1, 0, 1), repeat=dim) if any(o)]
    offs = []
    for a in range(dim):
        for s in (-1, 1):
            o = [0] * dim
            o[a] = s
            offs.append(tuple(o))
    return offs


def _shifted(arr, offset, fill):
    """``out[i] = arr[i + offset]``, padded with ``fill`` outside."""
    out = np.full(arr.shape, fill, dtype=arr.dtype)
    src, dst = [], []
    for o, n in zip(offset, arr.shape):
        if o >= 0:
            src.append(slice(o, n))
            dst.append(slice(0, n - o))
        else:
            src.append(slice(0, n + o))
            dst.append(slice(-o, n))
    out[tuple(dst)] = arr[tuple(src)]
    return out


@dataclass(frozen=True, eq=False)
class HalfGrid:
    """A tagged uniform grid.

    Attributes
    ----------
    dim : int
    h : float
        Spacing, identical along every axis.
    shape : str
        One of ``interval``, ``half_rectangle``, ``half_disk``.
    axes : tuple of ndarray
        Node coordinates per axis; the last axis is ``x_n`` starting at 0.
    node_class : ndarray of int
        ``NodeClass`` tag per node, shape ``extents``.
    n : int
        Resolution: number of cells along ``x_n``.
    radius : float
        Disk radius (``half_disk``) or height otherwise.
    """

    dim: int
    h: float
    shape: str
    axes: tuple
    node_class: np.ndarray = field(repr=False)
    n: int
    radius: float = 1.0
    half_width: float = 1.0

    # constructors -----------------------------------------------------------
    @classmethod
    def interval(cls, n: int, length: float = 1.0) -> "HalfGrid":
        n = _check_n(n)
        x = np.linspace(0.0, length, n + 1)
        tags = np.full(n + 1, NodeClass.INTERIOR, dtype=np.int8)
        tags[0] = NodeClass.FLAT
        tags[-1] = NodeClass.CURVED
        return cls(1, length / n, "interval", (x,), tags, n, float(length), 0.0)

    @classmethod
    def half_rectangle(cls, n: int, dim: int = 2, half_width: float = 1.0, height: float = 1.0):
        n = _check_n(n)
        _check_dim(dim, lo=2)
        h = height / n
        m = half_width / h
        if abs(m - round(m)) > 1e-9:
            raise ParameterError("half_width must be a multiple of the spacing")
        m = int(round(m))
        lat = np.linspace(-half_width, half_width, 2 * m + 1)
        axes = (lat,) * (dim - 1) + (np.linspace(0.0, height, n + 1),)
        ext = tuple(a.size for a in axes)
        tags = np.full(ext, NodeClass.CURVED, dtype=np.int8)
        tags[(slice(1, -1),) * (dim - 1) + (slice(1, -1),)] = NodeClass.INTERIOR
        tags[(Ellipsis, 0)] = NodeClass.FLAT
        return cls(dim, h, "half_rectangle", axes, tags, n, float(height), float(half_width))

    @classmethod
    def half_disk(cls, n: int, dim: int = 2, radius: float = 1.0) -> "HalfGrid":
        n = _check_n(n)
        _check_dim(dim, lo=2)
        h = radius / n
        lat = np.linspace(-radius, radius, 2 * n + 1)
        axes = (lat,) * (dim - 1) + (np.linspace(0.0, radius, n + 1),)
        X = np.meshgrid(*axes, indexing="ij")
        r2 = sum(x * x for x in X)
        inside = r2 <= radius * radius * (1 + 1e-12)
        full = inside.copy()
        for off in _stencil_offsets(dim):
            full &= _shifted(inside, off, False)
        tags = np.full(inside.shape, NodeClass.EXTERIOR, dtype=np.int8)
        tags[inside] = NodeClass.CURVED
        tags[full & (X[-1] > 0)] = NodeClass.INTERIOR
        tags[inside & (X[-1] == 0)] = NodeClass.FLAT
        return cls(dim, h, "half_disk", axes, tags, n, float(radius), float(radius))

    @classmethod
    def from_config(cls, shape: str, n: int, dim: int = 2, radius: float = 1.0, half_width=None):
        if shape == "interval":
            return cls.interval(n, radius)
        if shape == "half_rectangle":
            return cls.half_rectangle(n, dim, radius if half_width is None else half_width, radius)
        if shape == "half_disk":
            return cls.half_disk(n, dim, radius)
        raise ParameterError(f"unknown shape {shape!r}; expected one of {SHAPES}")

    # geometry ---------------------------------------------------------------
    @property
    def extents(self):
        return tuple(a.size for a in self.axes)

    @property
    def origin(self):
        return np.array([a[0] for a in self.axes])

    def mesh(self):
        return np.meshgrid(*self.axes, indexing="ij")

    def mask(self, *classes):
        return np.isin(self.node_class, [int(c) for c in classes])

    @property
    def domain_mask(self):
        return self.node_class != NodeClass.EXTERIOR

    @property
    def interior_mask(self):
        return self.node_class == NodeClass.INTERIOR

    @property
    def boundary_mask(self):
        return self.mask(NodeClass.FLAT, NodeClass.CURVED)

    def points(self, mask=None) -> np.ndarray:
        """Coordinates ``(k, dim)`` of nodes selected by ``mask`` (default: domain)."""
        if mask is None:
            mask = self.domain_mask
        X = self.mesh()
        return np.stack([x[mask] for x in X], axis=-1)

    def coarsen(self):
        """Same domain at half the resolution, or ``None`` if not possible."""
        if self.n % 2 or self.n // 2 < 2:
            return None
        if self.shape == "interval":
            return HalfGrid.interval(self.n // 2, self.radius)
        if self.shape == "half_rectangle":
            try:
                return HalfGrid.half_rectangle(self.n // 2, self.dim, self.half_width, self.radius)
            except ParameterError:
                return None
        return HalfGrid.half_disk(self.n // 2, self.dim, self.radius)

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "shape": self.shape,
            "n": self.n,
            "h": self.h,
            "radius": self.radius,
            "extents": list(self.extents),
        }


def _check_n(n):
    n = int(n)
    if n < 2:
        raise ParameterError("resolution must be >= 2")
    return n


def _check_dim(dim, lo=1):
    if dim not in (1, 2, 3) or dim < lo:
        raise ParameterError(f"dim must be in {{{lo},...,3}}, got {dim}")


@dataclass(eq=False)
class ScalarField:
    """Node values on a ``HalfGrid``; exterior nodes hold NaN."""

    grid: HalfGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.extents:
            raise ParameterError(f"values shape {v.shape} != grid extents {self.grid.extents}")
        v[~self.grid.domain_mask] = np.nan
        self.values = v

    @classmethod
    def from_function(cls, grid: HalfGrid, fn):
        """Sample ``fn(points) -> values`` at every domain node."""
        v = np.full(grid.extents, np.nan)
        m = grid.domain_mask
        v[m] = np.asarray(fn(grid.points(m)), dtype=float)
        return cls(grid, v)

    @classmethod
    def zeros(cls, grid: HalfGrid):
        return cls(grid, np.zeros(grid.extents))

    def copy(self):
        return ScalarField(self.grid, self.values.copy())

    def sup(self) -> float:
        m = self.grid.domain_mask
        return float(np.max(np.abs(self.values[m]))) if m.any() else 0.0

    def __getitem__(self, idx):
        return self.values[idx]

    # CSV --------------------------------------------------------------------
    def to_csv(self, path):
        pts = self.grid.points()
        vals = self.values[self.grid.domain_mask]
        header = ",".join([f"x{i + 1}" for i in range(self.grid.dim)] + ["u"])
        with open(path, "w") as fh:
            fh.write(f"# format_version: {FORMAT_VERSION}\n")
            fh.write(header + "\n")
            np.savetxt(fh, np.column_stack([pts, vals]), delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "ScalarField":
        """Read a field written by ``to_csv`` and rebuild its grid from coordinates."""
        with open(path) as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        header = lines[0].strip().split(",")
        data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
        dim = len(header) - 1
        return field_from_points(data[:, :dim], data[:, dim])


def field_from_points(pts, vals) -> ScalarField:
    pts = np.asarray(pts, dtype=float)
    dim = pts.shape[1]
    xn = np.unique(pts[:, -1])
    h = float(np.min(np.diff(xn)))
    n = int(round((xn[-1] - xn[0]) / h))
    if dim == 1:
        grid = HalfGrid.interval(n, float(xn[-1]))
    else:
        lat = np.unique(pts[:, 0])
        full_count = lat.size ** (dim - 1) * xn.size
        if pts.shape[0] == full_count:
            grid = HalfGrid.half_rectangle(n, dim, float(lat[-1]), float(xn[-1]))
        else:
            grid = HalfGrid.half_disk(n, dim, float(xn[-1]))
    idx = np.rint((pts - grid.origin) / grid.h).astype(int)
    v = np.full(grid.extents, np.nan)
    v[tuple(idx.T)] = vals
    present = np.zeros(grid.extents, bool)
    present[tuple(idx.T)] = True
    if not np.array_equal(present, grid.domain_mask):
        raise DomainError("CSV node set does not match a supported half-domain grid")
    return ScalarField(grid, v)


# discrete differential operators -------------------------------------------
def _require_stencil(grid: HalfGrid, node, diagonal=True):
    node = tuple(int(i) for i in np.atleast_1d(node))
    if len(node) != grid.dim:
        raise StencilError(f"node index {node} has wrong dimension", node=node)
    ext = grid.extents
    for off in _stencil_offsets(grid.dim, diagonal) + [(0,) * grid.dim]:
        nb = tuple(i + o for i, o in zip(node, off))
        if any(j < 0 or j >= e for j, e in zip(nb, ext)) or grid.node_class[nb] == NodeClass.EXTERIOR:
            raise StencilError(f"stencil of node {node} leaves the grid at {nb}", node=node)
    return node


def _val(field, node, off):
    return field.values[tuple(i + o for i, o in zip(node, off))]


def hessian_at(field: ScalarField, node) -> np.ndarray:
    """Central-difference Hessian at one node (diagonal neighbours required)."""
    g = field.grid
    node = _require_stencil(g, node, diagonal=g.dim > 1)
    d, h = g.dim, g.h
    H = np.zeros((d, d))
    u0 = _val(field, node, (0,) * d)
    for a in range(d):
        e = [0] * d
        e[a] = 1
        H[a, a] = (_val(field, node, e) - 2 * u0 + _val(field, node, [-x for x in e])) / h**2
        for b in range(a + 1, d):
            pp, pm, mp, mm = ([0] * d for _ in range(4))
            pp[a], pp[b] = 1, 1
            pm[a], pm[b] = 1, -1
            mp[a], mp[b] = -1, 1
            mm[a], mm[b] = -1, -1
            val = (_val(field, node, pp) - _val(field, node, pm) - _val(field, node, mp)
                   + _val(field, node, mm)) / (4 * h**2)
            H[a, b] = H[b, a] = val
    return H


def gradient_at(field: ScalarField, node) -> np.ndarray:
    g = field.grid
    node = _require_stencil(g, node, diagonal=False)
    d = g.dim
    out = np.zeros(d)
    for a in range(d):
        e = [0] * d
        e[a] = 1
        out[a] = (_val(field, node, e) - _val(field, node, [-x for x in e])) / (2 * g.h)
    return out


def laplacian_at(field: ScalarField, node) -> float:
    g = field.grid
    node = _require_stencil(g, node, diagonal=False)
    d = g.dim
    u0 = _val(field, node, (0,) * d)
    s = 0.0
    for a in range(d):
        e = [0] * d
        e[a] = 1
        s += _val(field, node, e) + _val(field, node, [-x for x in e]) - 2 * u0
    return float(s / g.h**2)


def hessians(field: ScalarField, mask=None) -> np.ndarray:
    """Hessians ``(k, d, d)`` at all nodes of ``mask`` (default: interior nodes)."""
    g = field.grid
    if mask is None:
        mask = g.interior_mask
    u = field.values
    d, h = g.dim, g.h
    H = np.zeros((int(mask.sum()), d, d))
    for a in range(d):
        e = [0] * d
        e[a] = 1
        up = _shifted(u, e, np.nan)[mask]
        um = _shifted(u, [-x for x in e], np.nan)[mask]
        H[:, a, a] = (up - 2 * u[mask] + um) / h**2
        for b in range(a + 1, d):
            acc = 0.0
            for sa, sb, sg in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
                o = [0] * d
                o[a], o[b] = sa, sb
                acc = acc + sg * _shifted(u, o, np.nan)[mask]
            H[:, a, b] = H[:, b, a] = acc / (4 * h**2)
    return H


def laplacians(field: ScalarField, mask=None) -> np.ndarray:
    g = field.grid
    if mask is None:
        mask = g.interior_mask
    u = field.values
    out = -2 * g.dim * u[mask]
    for off in _stencil_offsets(g.dim, diagonal=False):
        out = out + _shifted(u, off, np.nan)[mask]
    return out / g.h**2


def gradients(field: ScalarField, mask=None) -> np.ndarray:
    g = field.grid
    if mask is None:
        mask = g.interior_mask
    u = field.values
    out = np.zeros((int(mask.sum()), g.dim))
    for a in range(g.dim):
        e = [0] * g.dim
        e[a] = 1
        out[:, a] = (_shifted(u, e, np.nan)[mask] - _shifted(u, [-x for x in e], np.nan)[mask]) / (2 * g.h)
    return out


# interpolation ------------------------------------------------------------
def interpolate(field: ScalarField, points) -> np.ndarray:
    """Multilinear interpolation at ``points`` of shape ``(k, dim)``.

    Raises
    ------
    DomainError
        If a point lies outside the grid box or in a cell with an exterior corner.
    """
    g = field.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != g.dim:
        raise DomainError("points have the wrong dimension")
    if pts.shape[0] == 0:
        return np.zeros(0)
    rel = (pts - g.origin) / g.h
    ext = np.array(g.extents)
    tol = 1e-9
    bad = np.any((rel < -tol) | (rel > ext - 1 + tol), axis=1)
    if bad.any():
        p = pts[np.argmax(bad)]
        raise DomainError(f"point {p.tolist()} lies outside the source grid", point=p.tolist())
    rel = np.clip(rel, 0, ext - 1)
    i0 = np.minimum(np.floor(rel).astype(int), ext - 2)
    t = rel - i0
    out = np.zeros(pts.shape[0])
    for corner in itertools.product((0, 1), repeat=g.dim):
        c = np.array(corner)
        w = np.prod(np.where(c == 1, t, 1 - t), axis=1)
        v = g_values_at(field, i0 + c)
        nz = w > 0
        if np.any(np.isnan(v[nz])):
            k = np.flatnonzero(nz & np.isnan(v))[0]
            raise DomainError(
                f"point {pts[k].tolist()} lies in a cell touching the exterior",
                point=pts[k].tolist(),
            )
        out += np.where(nz, w * np.nan_to_num(v), 0.0)
    return out


def g_values_at(field, idx):
    return field.values[tuple(idx.T)]


def rescale_field(field: ScalarField, x0, r: float, params, target: HalfGrid) -> ScalarField:
    """Sample ``u(x0 + r x) / r**beta`` on ``target``."""
    if not (r > 0):
        raise ParameterError("r must be > 0")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    m = target.domain_mask
    pts = x0 + r * target.points(m)
    vals = interpolate(field, pts) / r ** params.beta
    out = np.full(target.extents, np.nan)
    out[m] = vals
    return ScalarField(target, out)


def sup_on_halfball(field: ScalarField, x0, r: float) -> float:
    """Max of ``u`` over domain nodes in ``B_r(x0)`` with ``x_n >= 0``."""
    g = field.grid
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    pts = g.points()
    sel = np.sum((pts - x0) ** 2, axis=1) <= r * r * (1 + 1e-12)
    if not sel.any():
        raise DomainError(f"ball B_{r}({x0.tolist()}) contains no grid node")
    return float(np.max(field.values[g.domain_mask][sel]))


def halfsphere_samples(x0, r: float, dim: int, n_samples=None):
    """Uniform samples of ``dB_r(x0)`` inside ``{x_n > 0}`` (64*dim points by default)."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if dim == 1:
        cand = np.array([[x0[0] - r], [x0[0] + r]])
        return cand[cand[:, 0] > 0]
    n = 64 * dim if n_samples is None else int(n_samples)
    c = max(-1.0, -x0[-1] / r)  # admissible normal component exceeds c
    if c >= 1.0:
        return np.zeros((0, dim))
    k = (np.arange(n) + 0.5) / n
    if dim == 2:
        th0 = np.arcsin(np.clip(c, -1, 1))
        if c <= -1:
            th = -np.pi / 2 + 2 * np.pi * k
        else:
            th = th0 + (np.pi - 2 * th0) * k
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        z = c + (1 - c) * k
        phi = np.pi * (3 - np.sqrt(5)) * np.arange(n)
        s = np.sqrt(np.maximum(1 - z * z, 0))
        dirs = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    return x0 + r * dirs


def sup_on_halfsphere(field: ScalarField, x0, r: float) -> float:
    pts = halfsphere_samples(x0, r, field.grid.dim)
    if pts.shape[0] == 0:
        raise DomainError(f"half-sphere of radius {r} is empty")
    return float(np.max(interpolate(field, pts)))
