"""Command line entry point ``altphillips``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np


def _cmd_solve(args):
    from .runner import run_scenario
    from .scenario import load_scenario

    sc = load_scenario(args.scenario)
    if args.n:
        sc = sc.with_resolution(args.n)
    rep = run_scenario(sc, args.output, plots=not args.no_plots)
    print(json.dumps({"name": rep["name"], "failures": rep["failures"], "solver": rep.get("solver")}, indent=2))
    return 1 if rep["failures"] else 0


def _cmd_suite(args):
    from .runner import run_suite

    summ = run_suite(args.manifest, args.output, plots=not args.no_plots)
    for s in summ["scenarios"]:
        print(f"{s['status'].upper():4s} {s['name']}")
        for a in s["assertions"]:
            print(f"    {a['status']:>22s}  {a['assert']}  (value: {a['value']})")
    return 0 if summ["passed"] else 1


def _cmd_oracle(args):
    from ..operators import ApParams
    from ..oracle1d import profile_eval

    p = ApParams(args.gamma)
    x = np.linspace(0.0, args.length, args.n + 1)
    out = open(args.output, "w") if args.output else sys.stdout
    out.write("# format_version: 1\nx1,u\n")
    np.savetxt(out, np.column_stack([x, profile_eval(p, x)]), delimiter=",", fmt="%.17g")
    if args.output:
        out.close()
    return 0


def _cmd_plot(args):
    from .plots import render_plots

    with open(args.report) as fh:
        rep = json.load(fh)
    for p in render_plots(rep, args.output):
        print(p)
    return 0


def _cmd_check_operator(args):
    from ..operators import Laplacian, LinearTrace, PerturbedTrace, ellipticity_report

    if args.name == "laplacian":
        spec = Laplacian()
    elif args.name == "perturbed_trace":
        spec = PerturbedTrace(args.theta)
    elif args.name == "linear_trace":
        a = np.asarray(args.A, dtype=float)
        d = int(round(np.sqrt(a.size)))
        spec = LinearTrace(a.reshape(d, d))
    else:  # pragma: no cover - argparse restricts choices
        raise SystemExit(2)
    dim = spec.A.shape[0] if args.name == "linear_trace" else args.dim
    rep = ellipticity_report(spec, args.samples, args.seed, dim)
    print(json.dumps(rep, indent=2))
    ok = rep["convexity_violations"] == 0 and rep["within_declared"]
    return 0 if ok else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="altphillips", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one scenario and write its report")
    s.add_argument("scenario", help="scenario TOML file or bundled name")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--n", type=int, default=None, help="override the resolution")
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(func=_cmd_solve)

    s = sub.add_parser("suite", help="run a manifest of scenarios with assertions")
    s.add_argument("manifest")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(func=_cmd_suite)

    s = sub.add_parser("oracle", help="tabulate closed-form references")
    osub = s.add_subparsers(dest="what", required=True)
    o = osub.add_parser("profile", help="half-space profile on [0, length]")
    o.add_argument("--gamma", type=float, default=1.5)
    o.add_argument("--n", type=int, default=64)
    o.add_argument("--length", type=float, default=1.0)
    o.add_argument("-o", "--output", default=None)
    o.set_defaults(func=_cmd_oracle)

    s = sub.add_parser("plot", help="render SVG figures from a report")
    s.add_argument("report")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=_cmd_plot)

    s = sub.add_parser("check-operator", help="sample the structural assumptions of an operator")
    s.add_argument("name", choices=["laplacian", "linear_trace", "perturbed_trace"])
    s.add_argument("--theta", type=float, default=0.1)
    s.add_argument("--A", type=float, nargs="+", default=[1.0, 0.0, 0.0, 1.0], help="row-major matrix")
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--dim", type=int, default=2)
    s.set_defaults(func=_cmd_check_operator)
    return ap


def main(argv=None):
    from ..errors import AltPhillipsError

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AltPhillipsError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
