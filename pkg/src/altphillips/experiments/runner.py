"""Solve a scenario, run its diagnostics and write the artifacts."""

from __future__ import annotations

import json
import operator as _op
import re
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .. import analysis as an
from ..errors import AltPhillipsError, ManifestError
from ..grid import FORMAT_VERSION, ScalarField
from ..operators import Laplacian, PerturbedTrace
from ..oracle1d import first_integral, profile_eval, shoot
from ..solver import contact_floor, pde_residual, solve, solve_laplacian
from .scenario import SCENARIO_DIR, Scenario, load_scenario


def _origin(dim):
    return [0.0] * dim


def _base_point(req, sc, field, fb_cache):
    base = req.get("base", req.get("x0", "origin"))
    if isinstance(base, (list, tuple)):
        return list(map(float, base)), "given"
    if base == "nearest_free_boundary":
        fb = fb_cache()
        return fb.nearest(np.zeros(sc.dim)).tolist(), base
    return _origin(sc.dim), "origin"


def _nonincreasing(vals, slack=0.0):
    v = [x for x in vals if x is not None]
    return bool(len(v) == len(vals) and all(b <= a + slack for a, b in zip(v, v[1:])))


def run_analysis(name, req, sc: Scenario, field: ScalarField, ctx) -> dict:
    """Run one diagnostic request and return its table."""
    p, dim, grid = sc.params, sc.dim, field.grid
    kind = req.get("kind", name)
    if kind == "oracle":
        x = grid.axes[0]
        data_end = float(field.values[-1])
        if abs(data_end - profile_eval(p, x[-1])) <= 1e-15:
            ref, label = profile_eval(p, x), "closed_form_profile"
        else:
            steps = 4096 * max(1, grid.n // 4096)
            sh = shoot(p, float(x[-1]), data_end, tol=1e-13, steps=steps)
            stride = steps // grid.n
            ref, label = sh.values[::stride], "shooting"
        return {"linf_error": float(np.max(np.abs(field.values - ref))), "reference": label, "n": grid.n}
    if kind == "residual":
        r = pde_residual(field, sc.operator, p)
        return {"pde_residual_sup": float(np.nanmax(r.values)), "floor": contact_floor(grid, p)}
    if kind == "weiss":
        x0 = req.get("x0", _origin(dim))
        prof = an.weiss_profile(field, x0, req["radii"], p)
        tol = float(req.get("rel_tol", 1e-3)) * abs(prof.values[-1])
        out = {"radii": prof.radii.tolist(), "values": prof.values.tolist(), "x0": list(map(float, x0)),
               "tolerance": tol, "nondecreasing": prof.nondecreasing(tol)}
        if not isinstance(sc.operator, Laplacian):
            out["policy"] = "reported, not asserted"
        return out
    if kind == "growth":
        x0, how = _base_point(req, sc, field, ctx["fb"])
        rep = an.growth_exponent(field, x0, req["radii"], p)
        rep.update({"x0": x0, "base": how, "beta": p.beta})
        rep["relative_slope_error"] = abs(rep["slope"] - p.beta) / p.beta
        return rep
    if kind == "nondegeneracy":
        x0, how = _base_point(req, sc, field, ctx["fb"])
        a = float(req.get("a_factor", 1e-2)) * p.amplitude
        rep = an.nondegeneracy_check(field, x0, req["radii"], a, p)
        rep.update({"x0": x0, "base": how})
        return rep
    if kind == "free_boundary":
        fb = ctx["fb"]()
        return {"count": len(fb), "floor": fb.floor, "points_csv": ctx.get("fb_csv")}
    if kind == "contact_modulus":
        fb = ctx["fb"]()
        x0 = req.get("x0", _origin(dim))
        tab = an.contact_modulus(fb, req["radii"], x0)
        radii = sorted(tab, reverse=True)
        vals = [tab[r] for r in radii]
        ratio = None
        if vals[0] is not None and vals[-1] is not None and vals[0] > 0:
            ratio = vals[-1] / vals[0]
        return {"radii": radii, "values": vals, "x0": list(map(float, x0)),
                "nonincreasing": _nonincreasing(vals), "ratio_smallest_to_largest": ratio,
                "all_rows_present": all(v is not None for v in vals)}
    if kind == "blowup":
        x0 = req.get("x0", _origin(dim))
        rep = an.blowup_distance(field, x0, req["radii"], p, an.unit_target(dim, int(req.get("target_n", 64))))
        order = np.argsort(rep["radii"])[::-1]
        d = [rep["sup_distance_to_profile"][i] for i in order]
        rep["decreasing"] = bool(all(b < a for a, b in zip(d, d[1:])))
        rep["smallest_radius_relative"] = rep["relative"][int(np.argmin(rep["radii"]))]
        return rep
    if kind == "gradient_at_contact":
        x0 = req.get("x0", _origin(dim))
        g = an.gradient_at_contact(field, x0)
        return {"gradient": g, "h": grid.h, "ratio_to_h": g / grid.h}
    if kind == "w_transform":
        return {"residual_sup": an.transform_w(field, p)["residual_sup"]}
    if kind == "directional":
        region = None
        if "region_radius" in req:
            region = (req.get("region_center", _origin(dim)), float(req["region_radius"]))
        rows = an.directional_monotonicity(field, req["directions"], region)
        return {"rows": rows, "all_monotone": all(r["monotone"] for r in rows)}
    if kind == "first_integral":
        x, E = first_integral(field, p)
        return {"spread": float(np.max(E) - np.min(E)), "mean": float(np.mean(E))}
    if kind == "stability":
        thetas = [float(t) for t in req["thetas"]]
        base = ctx["laplacian_field"]()
        dists = []
        for th in thetas:
            r = solve(grid, ctx["data"], PerturbedTrace(th), p, sc.solver_opts)
            dists.append(float(np.nanmax(np.abs(r.field.values - base.values))))
        order = np.argsort(thetas)[::-1]
        ds = [dists[i] for i in order]
        return {"thetas": thetas, "distances": dists,
                "strictly_decreasing_in_theta": bool(all(b < a for a, b in zip(ds, ds[1:])))}
    if kind == "comparison":
        high = sc.boundary_data(req.get("high", {}))
        uh = solve(grid, high, sc.operator, p, sc.solver_opts).field
        m = grid.domain_mask
        viol = float(np.max(field.values[m] - uh.values[m]))
        thr = 10 * sc.solver_opts.tol_residual
        return {"max_violation": viol, "threshold": thr, "ordered": bool(viol <= thr), "high": req.get("high", {})}
    raise AltPhillipsError(f"unknown analysis {kind!r}")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def run_scenario(sc: Scenario, out_dir, plots: bool = True, result=None) -> dict:
    """Solve ``sc``, run every requested analysis and write the artifacts.

    Writes ``field.csv``, ``free_boundary.csv`` (when extracted),
    ``report.json`` and SVG plots into ``out_dir``.  A failing analysis is
    recorded under ``failures`` with its error code instead of aborting.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = sc.make_grid()
    data = sc.boundary_data()
    t0 = time.perf_counter()
    report = {"format_version": FORMAT_VERSION, "scenario": sc.raw, "name": sc.name, "failures": {}}
    try:
        res = result or solve(grid, data, sc.operator, sc.params, sc.solver_opts)
    except AltPhillipsError as exc:
        report["solver"] = {"error": exc.code, "message": str(exc)}
        report["failures"]["solver"] = exc.code
        _write_json(out / "report.json", report)
        return report
    report["solver"] = res.stats()
    timing = {"solve_s": time.perf_counter() - t0}
    field = res.field
    field.to_csv(out / "field.csv")
    report["artifacts"] = {"field_csv": str(out / "field.csv"), "plots": []}

    cache = {}

    def fb():
        if "fb" not in cache:
            cache["fb"] = an.extract_free_boundary(field, sc.params)
            path = out / "free_boundary.csv"
            with open(path, "w") as fh:
                fh.write(f"# format_version: {FORMAT_VERSION}\n")
                fh.write(",".join(f"x{i + 1}" for i in range(sc.dim)) + "\n")
                np.savetxt(fh, cache["fb"].points, delimiter=",", fmt="%.17g")
            report["artifacts"]["free_boundary_csv"] = str(path)
        return cache["fb"]

    def lap_field():
        if isinstance(sc.operator, Laplacian):
            return field
        if "lap" not in cache:
            cache["lap"] = solve_laplacian(grid, data, sc.params, sc.solver_opts).field
        return cache["lap"]

    ctx = {"fb": fb, "laplacian_field": lap_field, "data": data}
    diags = {}
    requests = dict(sc.analyses)
    if sc.comparison:
        requests["comparison"] = dict(sc.comparison, kind="comparison")
    for name, req in requests.items():
        req = req if isinstance(req, dict) else {}
        try:
            diags[name] = run_analysis(name, req, sc, field, ctx)
        except AltPhillipsError as exc:
            diags[name] = {"error": exc.code, "message": str(exc)}
            report["failures"][name] = exc.code
    report["diagnostics"] = diags
    timing["total_s"] = time.perf_counter() - t0
    report = _jsonable(report)
    if plots:
        from .plots import render_plots

        report["artifacts"]["plots"] = render_plots(report, out)
    _write_json(out / "report.json", report)
    # kept apart so that reports are reproducible byte for byte
    _write_json(out / "timing.json", timing)
    report["timing"] = timing
    return report


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True, allow_nan=True)


# suites ---------------------------------------------------------------------
_OPS = {"<=": _op.le, "<": _op.lt, ">=": _op.ge, ">": _op.gt, "==": _op.eq, "!=": _op.ne}
_ASSERT = re.compile(r"^\s*([\w.\[\]-]+)\s*(<=|>=|==|!=|<|>)\s*(.+?)\s*$")


def _lookup(report, path):
    cur = report
    for part in path.split("."):
        m = re.fullmatch(r"(\w+)\[(-?\d+)\]", part)
        if m:
            cur = cur[m.group(1)][int(m.group(2))]
        elif isinstance(cur, list):
            cur = cur[int(part)]
        else:
            cur = cur[part]
    return cur


def _parse_value(text):
    t = text.strip()
    if t in ("true", "false"):
        return t == "true"
    if t in ("null", "none", "None"):
        return None
    return float(t)


def evaluate_assertion(expr: str, report: dict) -> dict:
    m = _ASSERT.match(expr)
    if not m:
        raise ManifestError(f"cannot parse assertion {expr!r}")
    path, opname, rhs = m.groups()
    if "weiss" in path and report.get("scenario", {}).get("operator", {}).get("kind", "laplacian") != "laplacian":
        try:
            val = _lookup(report, path)
        except (KeyError, IndexError, TypeError):
            val = None
        return {"assert": expr, "value": val, "status": "reported, not asserted"}
    try:
        val = _lookup(report, path)
    except (KeyError, IndexError, TypeError):
        return {"assert": expr, "value": None, "status": "fail", "reason": "missing field"}
    want = _parse_value(rhs)
    try:
        ok = val is not None and bool(_OPS[opname](val, want))
    except TypeError:
        ok = False
    return {"assert": expr, "value": val, "status": "pass" if ok else "fail"}


def run_suite(manifest, out_dir, plots: bool = True, resolution_override=None) -> dict:
    """Run every scenario listed in a manifest and evaluate its assertions.

    The manifest is TOML with ``[[scenario]]`` entries holding ``file`` (path
    relative to the manifest or a bundled name) and ``assert`` (list of
    ``"dotted.path op value"`` strings).
    """
    mpath = Path(manifest)
    if not mpath.exists():
        raise ManifestError(f"manifest {manifest} not found")
    with open(mpath, "rb") as fh:
        man = tomllib.load(fh)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = man.get("scenario", [])
    summary = {"format_version": FORMAT_VERSION, "manifest": str(mpath), "scenarios": [], "passed": True}
    for ent in entries:
        f = Path(ent["file"])
        if not f.is_absolute():
            cand = mpath.parent / f
            f = cand if cand.exists() else f
        if not f.exists() and not f.suffix:
            f = SCENARIO_DIR / f"{ent['file']}.toml"
        if not f.exists():
            raise ManifestError(f"scenario file {ent['file']} listed in the manifest does not exist")
        sc = load_scenario(f)
        rep = run_scenario(sc, out / sc.name, plots=plots)
        rows = [evaluate_assertion(a, rep) for a in ent.get("assert", [])]
        failed = bool(rep.get("failures")) or any(r["status"] == "fail" for r in rows)
        summary["scenarios"].append({"name": sc.name, "file": str(f), "status": "fail" if failed else "pass",
                                     "assertions": rows, "failures": rep.get("failures", {})})
        summary["passed"] = summary["passed"] and not failed
    _write_json(out / "summary.json", summary)
    return summary
