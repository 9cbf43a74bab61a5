"""Calibrate the shift of the ``tangent2d`` boundary data.

The data ``profile(x_n - curvature x_1^2 - shift)`` on the curved boundary
produces a contact region that is symmetric in ``x_1``.  The shift is chosen
by a secant search so that the solution along the axis ``x_1 = 0`` is the
profile through the origin, i.e. the origin lies on the closure of the free
boundary.  The estimate used is ``x_n - (u(0, x_n)/amp)^(1/beta)`` at the first
row above ``x_n = probe``.

Usage::

    python scripts/calibrate_tangent2d.py --curvature 6 --n 512 --s0 -0.25 --s1 -0.28
"""

import argparse
import time

import numpy as np

from altphillips.analysis import blowup_distance, contact_modulus, extract_free_boundary, unit_target
from altphillips.experiments.scenario import make_boundary_data
from altphillips.grid import HalfGrid
from altphillips.operators import ApParams
from altphillips.solver import solve_laplacian


def axis_shift(field, params, probe):
    g = field.grid
    i0 = int(np.argmin(np.abs(g.axes[0])))
    j = int(np.searchsorted(g.axes[1], probe))
    x2 = g.axes[1][j]
    return x2 - (field.values[i0, j] / params.amplitude) ** (1.0 / params.beta)


def run(curvature, shift, n, params):
    data = make_boundary_data({"kind": "shifted_profile", "curvature": curvature, "shift": shift}, params, 2)
    return solve_laplacian(HalfGrid.half_disk(n), data, params).field


def report(field, params):
    radii = [0.4, 0.2, 0.1, 0.05]
    fb = extract_free_boundary(field, params)
    print("contact modulus", contact_modulus(fb, radii))
    bl = blowup_distance(field, [0.0, 0.0], radii, params, unit_target(2))
    print("blow-up relative", [round(float(v), 4) for v in bl["relative"]])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--curvature", type=float, default=6.0)
    ap.add_argument("--n", type=int, default=512)
    ap.add_argument("--s0", type=float, default=-0.25)
    ap.add_argument("--s1", type=float, default=-0.28)
    ap.add_argument("--probe", type=float, default=1 / 64)
    ap.add_argument("--tol", type=float, default=2e-5)
    ap.add_argument("--max-iter", type=int, default=8)
    args = ap.parse_args(argv)
    p = ApParams(1.5)

    s0, s1 = args.s0, args.s1
    f0 = axis_shift(run(args.curvature, s0, args.n, p), p, args.probe)
    print(f"shift {s0:+.6f} -> axis offset {f0:+.3e}", flush=True)
    field = run(args.curvature, s1, args.n, p)
    f1 = axis_shift(field, p, args.probe)
    print(f"shift {s1:+.6f} -> axis offset {f1:+.3e}", flush=True)
    for _ in range(args.max_iter):
        if abs(f1) <= args.tol:
            break
        s0, s1 = s1, s1 - f1 * (s1 - s0) / (f1 - f0)
        t = time.time()
        field = run(args.curvature, s1, args.n, p)
        f0, f1 = f1, axis_shift(field, p, args.probe)
        print(f"shift {s1:+.6f} -> axis offset {f1:+.3e}  ({time.time() - t:.0f} s)", flush=True)
    print("calibrated shift", s1)
    report(field, p)


if __name__ == "__main__":
    main()
