"""Scenario files (TOML) and their validation."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from ..errors import ParameterError, ValidationError
from ..grid import HalfGrid
from ..operators import ApParams, Operator, operator_from_config
from ..oracle1d import profile_eval
from ..solver import SolveOptions

SCENARIO_DIR = Path(__file__).with_name("scenarios")
DATA_KINDS = ("zero", "profile", "shifted_profile", "profile_ramp")


def _ramp(c):
    """0 for c <= -1/2, 1 for c >= 0, linear between."""
    return np.clip(2.0 * c + 1.0, 0.0, 1.0)


def make_boundary_data(cfg: dict, params: ApParams, dim: int):
    """Boundary generator ``points -> values`` from a ``[boundary_data]`` table.

    Kinds
    -----
    zero
        ``g = 0``.
    profile
        ``g = scale * profile(x_n) + offset``.
    shifted_profile
        ``g = scale * profile(x_n - curvature |x'|^2 - shift) + offset``, the
        half-space profile lifted over a paraboloid.
    profile_ramp
        ``g = scale * profile(x_n / |x|) * ramp(x_1 / |x|) + offset``.

    ``offset`` applies off the flat boundary only; every generator vanishes
    identically on ``{x_n = 0}``.
    """
    kind = str(cfg.get("kind", "profile"))
    if kind not in DATA_KINDS:
        raise ValidationError(f"unknown boundary_data kind {kind!r}; expected one of {DATA_KINDS}")
    scale = float(cfg.get("scale", 1.0))
    offset = float(cfg.get("offset", 0.0))
    curvature = float(cfg.get("curvature", 0.0))
    shift = float(cfg.get("shift", 0.0))
    if scale < 0 or offset < 0:
        raise ValidationError("boundary_data scale and offset must be nonnegative")

    def gen(points):
        P = np.atleast_2d(points)
        xn = P[:, -1]
        lat2 = np.sum(P[:, :-1] ** 2, axis=1)
        if kind == "zero":
            v = np.zeros_like(xn)
        elif kind == "profile":
            v = scale * profile_eval(params, xn)
        elif kind == "shifted_profile":
            v = scale * profile_eval(params, xn - curvature * lat2 - shift)
        else:
            rad = np.sqrt(lat2 + xn**2)
            rad = np.where(rad > 0, rad, 1.0)
            ramp = _ramp(P[:, 0] / rad) if dim > 1 else 1.0
            v = scale * profile_eval(params, xn / rad) * ramp
        v = np.where(xn > 0, v + offset, 0.0)
        return v

    return gen


@dataclass
class Scenario:
    name: str
    dim: int
    params: ApParams
    operator: Operator
    grid_cfg: dict
    boundary_cfg: dict
    analyses: dict
    solver_opts: SolveOptions
    seed: int = 0
    comparison: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def make_grid(self) -> HalfGrid:
        g = self.grid_cfg
        return HalfGrid.from_config(g["shape"], g["n"], self.dim, g.get("radius", 1.0), g.get("half_width"))

    def boundary_data(self, overrides=None):
        cfg = dict(self.boundary_cfg)
        cfg.update(overrides or {})
        return make_boundary_data(cfg, self.params, self.dim)

    def with_resolution(self, n: int) -> "Scenario":
        s = copy.deepcopy(self)
        s.grid_cfg["n"] = int(n)
        s.raw.setdefault("domain", {})["n"] = int(n)
        return s


def load_scenario(path) -> Scenario:
    """Read a scenario file; bare names resolve to the bundled scenarios."""
    p = Path(path)
    if not p.exists() and not p.suffix:
        p = SCENARIO_DIR / f"{path}.toml"
    if not p.exists():
        raise ValidationError(f"scenario file {path} not found")
    with open(p, "rb") as fh:
        raw = tomllib.load(fh)
    return scenario_from_dict(raw)


def scenario_from_dict(raw: dict) -> Scenario:
    try:
        name = str(raw["name"])
        dom = dict(raw["domain"])
    except KeyError as exc:
        raise ValidationError(f"scenario lacks required key {exc}") from None
    shape = dom.get("shape", "interval")
    dim = int(dom.get("dim", 1 if shape == "interval" else 2))
    n = int(dom.get("n", 64))
    radius = float(dom.get("radius", 1.0))
    if not 1 <= dim <= 3:
        raise ValidationError("dim must be 1, 2 or 3")
    if n < 32:
        raise ValidationError("resolution n must be >= 32")
    if (shape == "interval") != (dim == 1):
        raise ValidationError("interval domains are exactly the 1D domains")
    try:
        params = ApParams(float(raw.get("params", {}).get("gamma", 1.5)))
        op = operator_from_config(raw.get("operator", {"kind": "laplacian"}))
    except ParameterError as exc:
        raise ValidationError(str(exc)) from None
    sol = raw.get("solver", {})
    try:
        opts = SolveOptions(
            max_sweeps=int(sol.get("max_sweeps", 200)),
            tol_residual=float(sol.get("tol", 1e-10)),
            damping=float(sol.get("damping", 0.7)),
        )
    except ParameterError as exc:
        raise ValidationError(str(exc)) from None
    grid_cfg = {"shape": shape, "n": n, "radius": radius}
    if "half_width" in dom:
        grid_cfg["half_width"] = float(dom["half_width"])
    bcfg = dict(raw.get("boundary_data", {"kind": "profile"}))
    make_boundary_data(bcfg, params, dim)
    sc = Scenario(
        name=name,
        dim=dim,
        params=params,
        operator=op,
        grid_cfg=grid_cfg,
        boundary_cfg=bcfg,
        analyses=dict(raw.get("analyses", {})),
        solver_opts=opts,
        seed=int(raw.get("seed", 0)),
        comparison=dict(raw.get("comparison", {})),
        raw=raw,
    )
    validate_radii(sc)
    return sc


def validate_radii(sc: Scenario):
    """Every requested ball must fit inside the domain."""
    R = sc.grid_cfg["radius"]
    hw = sc.grid_cfg.get("half_width", R)
    reach = R if sc.grid_cfg["shape"] != "half_rectangle" else min(R, hw)
    for name, req in sc.analyses.items():
        if not isinstance(req, dict) or "radii" not in req:
            continue
        radii = [float(r) for r in req["radii"]]
        if any(r <= 0 for r in radii):
            raise ValidationError(f"analysis {name}: radii must be positive")
        base = req.get("x0")
        off = float(np.linalg.norm(base)) if isinstance(base, list) else 0.0
        if max(radii) + off > reach + 1e-12:
            raise ValidationError(
                f"analysis {name}: radius {max(radii)} around {base or 'origin'} leaves the domain of radius {reach}"
            )
